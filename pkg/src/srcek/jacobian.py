"""WPLS fit on weighted predictors with exact derivatives in the weights.

``wpls_with_jacobian`` runs the implicit WPLS recurrences on ``X diag(lam)``
while propagating the derivative of every intermediate with respect to the
channel weights ``lam``.  It returns the model in preimage form: an
object-space vector ``alpha`` with

    beta = diag(lam) @ X.T @ diag(gamma) @ alpha,

its Jacobian ``dalpha``, the intercept and the intercept gradient.  Keeping
the derivative recurrences in object space costs Theta(m^2 n l) instead of
the Theta(m n^2 l) a finite-difference sweep would need.

``residual_with_jacobian`` evaluates a cross-validation residual and its
Jacobian without ever forming the n-by-n Jacobian of the regression vector;
the rearranged product order keeps the cost linear in the channel count.
The straightforward quadratic-cost evaluation is kept behind ``slow=True``
as an independent check and benchmark contender.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, check_weight_vector
from .exceptions import DataValidationError, NumericalError
from .wpls import RANK_EPSILON, _check_factor_count, _rank_terminated

__all__ = ["JacobianBundle", "ResidualBundle", "wpls_with_jacobian",
           "residual_with_jacobian"]


@dataclass
class JacobianBundle:
    """Preimage form of a weighted-predictor WPLS fit plus derivatives.

    Attributes
    ----------
    alpha : ndarray (m,)
        Regression-vector preimage for the calibration objects.
    dalpha : ndarray (m, n)
        Jacobian of ``alpha`` with respect to the channel weights.
    beta0 : float
    grad_beta0 : ndarray (n,)
    factors_used : int
    """

    alpha: np.ndarray
    dalpha: np.ndarray
    beta0: float
    grad_beta0: np.ndarray
    factors_used: int

    def beta(self, cal: Dataset, lam: np.ndarray) -> np.ndarray:
        """Regression vector for the weighted predictors ``cal.X @ diag(lam)``."""
        return lam * (cal.X.T @ (cal.gamma * self.alpha))


@dataclass
class ResidualBundle:
    """Test-group residual and its Jacobian with respect to channel weights."""

    residual: np.ndarray
    dresidual: np.ndarray


def wpls_with_jacobian(data: Dataset, n_factors: int, lam) -> JacobianBundle:
    """Fit WPLS on ``X diag(lam)`` and differentiate through the fit.

    Parameters
    ----------
    data : Dataset
        Calibration objects; ``data.X`` is the raw (unweighted) matrix.
    n_factors : int
    lam : ndarray (n,)
        Channel weights, all nonzero.

    Raises
    ------
    DataValidationError
        Zero weight entry, bad shapes or factor count.
    NumericalError
        Non-finite intermediates.

    Notes
    -----
    Early rank termination is not an error; the derivative recurrences stop
    at the same factor as the value recurrences and ``factors_used`` reports
    the truncated count.  The fit is not differentiable across the
    termination boundary itself; derivatives returned there are one-sided.
    """
    X, y, gamma = data.X, data.y, data.gamma
    m, n = X.shape
    if m < 2:
        raise DataValidationError(f"need at least 2 objects to fit, got {m}")
    _check_factor_count(n_factors, m)
    lam = check_weight_vector(lam, n, require_nonzero=True)

    Xlam = X * lam[None, :]
    XLXG = (Xlam @ Xlam.T) * gamma[None, :]
    t0 = float(gamma.sum())
    gy = gamma * y
    y_norm = float(np.linalg.norm(y))
    gamma_max = float(gamma.max())
    score_scale = float(np.linalg.norm(Xlam, "fro") ** 2 * y_norm * gamma_max)

    Tk = np.ones(m)
    dTk = np.zeros((m, n))
    Vk = y.copy()
    dVk = np.zeros((m, n))

    Vs, dVs, qs, dqs, ws, dws = [], [], [], [], [], []
    q0 = 0.0
    factors_used = n_factors
    t_max = 0.0
    for k in range(n_factors + 1):
        gTk = gamma * Tk
        rk = float(gy @ Tk)
        tk = float(Tk @ gTk)
        tk_norm = float(np.linalg.norm(Tk))
        if _rank_terminated(rk, tk, tk_norm, k, y_norm, gamma_max,
                            score_scale, t_max):
            if k == 0:
                q0 = rk / t0
                factors_used = 0
            else:
                factors_used = k - 1
                del Vs[k - 1], dVs[k - 1]
                if ws:
                    del ws[k - 1], dws[k - 1]
            break
        if k >= 1:
            t_max = max(t_max, tk)
        drk = dTk.T @ gy
        dtk = 2.0 * (dTk.T @ gTk)
        qk = rk / tk
        dqk = (drk - qk * dtk) / tk
        if k == 0:
            q0 = qk
        else:
            qs.append(qk)
            dqs.append(dqk)
        if k < n_factors:
            dVk = dVk - qk * dTk - np.outer(Tk, dqk)
            Vk = Vk - qk * Tk
            Vs.append(Vk.copy())
            dVs.append(dVk.copy())
            Qk = XLXG @ Vk
            dQk = XLXG @ dVk + 2.0 * Xlam * (X.T @ (gamma * Vk))[None, :]
            Uk = Qk - gamma @ Qk / t0
            dUk = dQk - (gamma @ dQk)[None, :] / t0
            gUk = gamma * Uk
            wk = float(Tk @ gUk / tk)
            dwk = (dTk.T @ gUk + dUk.T @ gTk - wk * dtk) / tk
            dTk = dUk - wk * dTk - np.outer(Tk, dwk)
            Tk = Uk - wk * Tk
            ws.append(wk)
            dws.append(dwk)

    if factors_used == 0:
        alpha = np.zeros(m)
        dalpha = np.zeros((m, n))
    else:
        # Back substitution through the unit-diagonal bidiagonal system,
        # with the derivative of each solve step carried along.
        l = factors_used
        v = [None] * (l + 1)
        dv = [None] * (l + 1)
        v[l] = qs[l - 1]
        dv[l] = dqs[l - 1]
        for j in range(l - 1, 0, -1):
            v[j] = qs[j - 1] - ws[j] * v[j + 1]
            dv[j] = dqs[j - 1] - ws[j] * dv[j + 1] - v[j + 1] * dws[j]
        v_arr = np.array(v[1:])
        V = np.column_stack(Vs)
        alpha = V @ v_arr
        dalpha = V @ np.vstack(dv[1:])
        for j in range(1, l + 1):
            dalpha = dalpha + v[j] * dVs[j - 1]

    g_alpha = X.T @ (gamma * alpha)
    beta0 = float(gamma @ (y - XLXG @ alpha) / t0)
    S = XLXG @ dalpha + 2.0 * Xlam * g_alpha[None, :]
    grad_beta0 = -(S.T @ gamma) / t0

    if not (np.isfinite(beta0) and np.all(np.isfinite(alpha))
            and np.all(np.isfinite(dalpha)) and np.all(np.isfinite(grad_beta0))):
        raise NumericalError("wpls_with_jacobian produced non-finite results")
    return JacobianBundle(alpha=alpha, dalpha=dalpha, beta0=beta0,
                          grad_beta0=grad_beta0, factors_used=factors_used)


def residual_with_jacobian(cal: Dataset, test: Dataset, n_factors: int, lam,
                           slow: bool = False) -> ResidualBundle:
    """Residual of a weighted-predictor fit on a test group, with Jacobian.

    The model is fitted on ``cal.X @ diag(lam)`` and evaluated on
    ``test.X @ diag(lam)``; the residual is ``y_test`` minus the prediction.

    Parameters
    ----------
    cal, test : Dataset
        Must share the channel count.  ``test`` may hold a single object.
    n_factors : int
    lam : ndarray (n,)
        Channel weights, all nonzero.
    slow : bool
        Evaluate the Jacobian through the explicit regression-vector
        Jacobian instead of the rearranged object-space products.  Costs
        Theta(m n^2 l); intended only as a diagnostics cross-check and
        benchmark contender.
    """
    if test.n_objects < 1:
        raise DataValidationError("test group is empty")
    if cal.n_channels != test.n_channels:
        raise DataValidationError(
            f"calibration has {cal.n_channels} channels, test has {test.n_channels}"
        )
    n = cal.n_channels
    lam = check_weight_vector(lam, n, require_nonzero=True)

    bundle = wpls_with_jacobian(cal, n_factors, lam)
    gamma_c = cal.gamma
    g_alpha = cal.X.T @ (gamma_c * bundle.alpha)
    beta = lam * g_alpha
    prediction = test.X @ (lam * beta) + bundle.beta0
    residual = test.y - prediction

    if slow:
        dbeta = np.diag(g_alpha) + lam[:, None] * (
            cal.X.T @ (gamma_c[:, None] * bundle.dalpha)
        )
        dresidual = -test.X @ (np.diag(beta) + lam[:, None] * dbeta) \
            - np.outer(np.ones(test.n_objects), bundle.grad_beta0)
    else:
        weighted_cross = (test.X * (lam ** 2)[None, :]) @ cal.X.T
        dresidual = (
            -2.0 * test.X * (lam * g_alpha)[None, :]
            - weighted_cross @ (gamma_c[:, None] * bundle.dalpha)
            - np.outer(np.ones(test.n_objects), bundle.grad_beta0)
        )
    return ResidualBundle(residual=residual, dresidual=dresidual)
