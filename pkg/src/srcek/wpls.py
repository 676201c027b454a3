"""Weighted partial least squares regression.

Two algebraically equivalent single-response WPLS fitters are provided:

``wpls_vanilla``
    Classic deflation form.  The predictor matrix is explicitly deflated one
    rank at a time.  Score, weight and loading vectors are kept unnormalized,
    which makes the loading/weight cross-product matrix unit-diagonal upper
    bidiagonal and keeps every quantity smooth in the inputs.

``wpls_implicit``
    Deflation-free form.  All recurrences run on "preimage" vectors in
    object space, reusing a precomputed ``X Xᵀ Γ`` product.  It produces the
    same scores, coupling scalars and affine model as ``wpls_vanilla`` and is
    the form the derivative computation in :mod:`srcek.jacobian` builds on.

Both return the affine model (regression vector and intercept) together with
the full factorization so that callers and tests never need to recompute
internals.

The response-weight matrix is diagonal, ``diag(gamma)`` with strictly
positive ``gamma``; all score vectors come out pairwise orthogonal in the
inner product it defines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .exceptions import DataValidationError, NumericalError

__all__ = ["WplsModel", "WplsFactorization", "wpls_vanilla", "wpls_implicit"]

# Relative tolerance of the rank-termination tests.  Exact-zero tests are
# numerically meaningless; both fitters stop when the current score vector is
# a pure roundoff remnant or when the response has no component along it.
RANK_EPSILON = 1e-12

# A factor whose weighted squared score norm has dropped to machine epsilon
# relative to the largest one seen is a roundoff remnant of an exhausted
# rank; keeping it would divide by a meaningless t and wreck the model.
GRAM_COLLAPSE = 64.0 * np.finfo(float).eps


@dataclass
class WplsModel:
    """Affine model ``y ≈ X @ beta + beta0``.

    ``factors_used`` can be smaller than the requested factor count when the
    rank of the (centered) predictors is exhausted early.
    """

    beta: np.ndarray
    beta0: float
    factors_used: int

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X @ self.beta + self.beta0


@dataclass
class WplsFactorization:
    """Internal quantities of a WPLS fit with ``l`` used factors.

    Attributes
    ----------
    T : ndarray (m, l + 1)
        Score vectors; column 0 is all ones.
    P : ndarray (n, l + 1)
        Loading vectors; column 0 holds the weighted channel means.
    W : ndarray (n, l)
        Weight vectors for factors 1..l.
    V : ndarray (m, l)
        Preimages of the weight vectors: ``W_k = Xᵀ diag(gamma) V_k``.
    q : ndarray (l + 1,)
        Response loadings; ``q[0]`` is the weighted response mean.
    w_scalars : ndarray (l,)
        Coupling scalars; ``w_scalars[0]`` is identically zero and
        ``w_scalars[1:]`` is the superdiagonal of ``P[:, 1:].T @ W``.
    t_scalars, r_scalars : ndarray (l + 1,)
        Weighted squared norms of the scores and response/score weighted
        inner products.
    """

    T: np.ndarray
    P: np.ndarray
    W: np.ndarray
    V: np.ndarray
    q: np.ndarray
    w_scalars: np.ndarray
    t_scalars: np.ndarray
    r_scalars: np.ndarray


def _check_factor_count(n_factors: int, m: int) -> None:
    # n_factors == m is allowed: rank termination then caps the factors
    # actually used at m - 1 (the all-ones score consumes one dimension).
    if not 1 <= n_factors <= m:
        raise DataValidationError(
            f"factor count must be in [1, {m}] for {m} objects, got {n_factors}"
        )


def _rank_terminated(rk: float, tk: float, tk_norm: float, k: int,
                     y_norm: float, gamma_max: float, score_scale: float,
                     t_max: float) -> bool:
    if k > 0 and (tk_norm <= RANK_EPSILON * score_scale
                  or tk <= GRAM_COLLAPSE * t_max):
        return True
    return abs(rk) <= RANK_EPSILON * y_norm * tk_norm * gamma_max


def _check_finite(beta: np.ndarray, beta0: float, origin: str) -> None:
    if not (np.all(np.isfinite(beta)) and np.isfinite(beta0)):
        raise NumericalError(f"{origin} produced non-finite coefficients")


def _assemble(X, y, gamma, Ts, Ps, Ws, qs, ts, rs, ws, factors_used, origin):
    """Back-substitute for beta and pack the factorization."""
    m, n = X.shape
    q = np.array(qs)
    w = np.array(ws) if ws else np.zeros(0)
    if factors_used == 0:
        beta = np.zeros(n)
        v = np.zeros(0)
    else:
        # (PᵀW) is unit-diagonal upper bidiagonal with superdiagonal w[1:],
        # so the linear solve is a two-term back substitution.
        v = np.zeros(factors_used + 1)
        v[factors_used] = q[factors_used]
        for j in range(factors_used - 1, 0, -1):
            v[j] = q[j] - w[j] * v[j + 1]
        v = v[1:]
        W = np.column_stack(Ws)
        beta = W @ v
    beta0 = float(q[0] - Ps[0] @ beta)
    _check_finite(beta, beta0, origin)

    # Preimage recurrence: V_{k+1} = V_k - q_k T_k starting from the response.
    Vk = y.copy()
    Vs = []
    for k in range(factors_used):
        Vk = Vk - q[k] * Ts[k]
        Vs.append(Vk.copy())

    fact = WplsFactorization(
        T=np.column_stack(Ts),
        P=np.column_stack(Ps),
        W=np.column_stack(Ws) if Ws else np.zeros((n, 0)),
        V=np.column_stack(Vs) if Vs else np.zeros((m, 0)),
        q=q,
        w_scalars=w,
        t_scalars=np.array(ts),
        r_scalars=np.array(rs),
    )
    return WplsModel(beta=beta, beta0=beta0, factors_used=factors_used), fact


def wpls_vanilla(data: Dataset, n_factors: int):
    """Fit WPLS by explicit rank-one deflation of the predictor matrix.

    Parameters
    ----------
    data : Dataset
    n_factors : int
        Requested number of factors, between 1 and the number of objects.

    Returns
    -------
    (WplsModel, WplsFactorization)

    Raises
    ------
    DataValidationError
        On dimension mismatch or an out-of-range factor count.
    NumericalError
        If the unnormalized recurrences overflow into non-finite values.
    """
    X, y, gamma = data.X, data.y, data.gamma
    m, n = X.shape
    if m < 2:
        raise DataValidationError(f"need at least 2 objects to fit, got {m}")
    _check_factor_count(n_factors, m)

    gy = gamma * y
    y_norm = float(np.linalg.norm(y))
    gamma_max = float(gamma.max())
    score_scale = float(np.linalg.norm(X, "fro") ** 2 * y_norm * gamma_max)

    Xk = X.copy()
    Ts = [np.ones(m)]
    Ps, Ws, qs, ts, rs, ws = [], [], [], [], [], []
    factors_used = n_factors
    t_max = 0.0
    for k in range(n_factors + 1):
        Tk = Ts[k]
        gTk = gamma * Tk
        rk = float(gy @ Tk)
        tk = float(Tk @ gTk)
        tk_norm = float(np.linalg.norm(Tk))
        if _rank_terminated(rk, tk, tk_norm, k, y_norm, gamma_max,
                            score_scale, t_max):
            if k == 0:
                # Degenerate response (weighted mean ~ 0 relative to scale):
                # keep the intercept-only model.
                t0 = float(gamma.sum())
                Ps.append(X.T @ gamma / t0)
                qs.append(rk / t0)
                ts.append(t0)
                rs.append(rk)
                factors_used = 0
            else:
                # Factor k would contribute nothing; drop it and stop.
                factors_used = k - 1
                del Ts[k], Ws[k - 1]
                if ws:
                    del ws[k - 1]
            break
        if k >= 1:
            t_max = max(t_max, tk)
        Pk = Xk.T @ gTk / tk
        Ps.append(Pk)
        qs.append(rk / tk)
        ts.append(tk)
        rs.append(rk)
        if k < n_factors:
            Xk = Xk - np.outer(Tk, Pk)
            Wk1 = Xk.T @ gy
            Ws.append(Wk1)
            Ts.append(Xk @ Wk1)
            # Coupling scalar pairing loading k with weight vector k + 1;
            # zero for k = 0 because that weight vector is already centered.
            ws.append(0.0 if k == 0 else float(Pk @ Wk1))

    return _assemble(X, y, gamma, Ts, Ps, Ws, qs, ts, rs, ws,
                     factors_used, "wpls_vanilla")


def wpls_implicit(data: Dataset, n_factors: int):
    """Fit WPLS without deflating the predictor matrix.

    Runs the score recurrences through preimage vectors in object space with
    a single precomputed ``X Xᵀ diag(gamma)`` product, then maps back to
    channel space only once at the end.  Output agrees with
    :func:`wpls_vanilla` up to floating-point roundoff.
    """
    X, y, gamma = data.X, data.y, data.gamma
    m, n = X.shape
    if m < 2:
        raise DataValidationError(f"need at least 2 objects to fit, got {m}")
    _check_factor_count(n_factors, m)

    y_norm = float(np.linalg.norm(y))
    gamma_max = float(gamma.max())
    score_scale = float(np.linalg.norm(X, "fro") ** 2 * y_norm * gamma_max)

    XXG = (X @ X.T) * gamma[None, :]
    t0 = float(gamma.sum())

    Ts = [np.ones(m)]
    Vs, qs, ts, rs, ws = [], [], [], [], []
    Vk = y.copy()
    factors_used = n_factors
    t_max = 0.0
    for k in range(n_factors + 1):
        Tk = Ts[k]
        rk = float((gamma * y) @ Tk)
        tk = float(Tk @ (gamma * Tk))
        tk_norm = float(np.linalg.norm(Tk))
        if _rank_terminated(rk, tk, tk_norm, k, y_norm, gamma_max,
                            score_scale, t_max):
            if k == 0:
                qs.append(rk / t0)
                ts.append(t0)
                rs.append(rk)
                factors_used = 0
            else:
                factors_used = k - 1
                del Ts[k], Vs[k - 1]
                if ws:
                    del ws[k - 1]
            break
        if k >= 1:
            t_max = max(t_max, tk)
        qs.append(rk / tk)
        ts.append(tk)
        rs.append(rk)
        if k < n_factors:
            Vk = Vk - qs[k] * Tk
            Vs.append(Vk.copy())
            Qk = XXG @ Vk
            Uk = Qk - Ts[0] * (gamma @ Qk / t0)
            wk = float(Tk @ (gamma * Uk) / tk)
            Ts.append(Uk - wk * Tk)
            ws.append(wk)

    q = np.array(qs)
    w = np.array(ws) if ws else np.zeros(0)
    if factors_used == 0:
        alpha = np.zeros(m)
        beta = np.zeros(n)
    else:
        v = np.zeros(factors_used + 1)
        v[factors_used] = q[factors_used]
        for j in range(factors_used - 1, 0, -1):
            v[j] = q[j] - w[j] * v[j + 1]
        V = np.column_stack(Vs)
        alpha = V @ v[1:]
        beta = X.T @ (gamma * alpha)
    beta0 = float(q[0] - gamma @ (X @ beta) / t0)
    _check_finite(beta, beta0, "wpls_implicit")

    # Channel-space internals, reconstructed once from the object-space run.
    T = np.column_stack(Ts)
    P = X.T @ (T * gamma[:, None]) / np.array(ts)[None, :]
    V = np.column_stack(Vs) if Vs else np.zeros((m, 0))
    W = X.T @ (V * gamma[:, None]) if factors_used else np.zeros((n, 0))

    fact = WplsFactorization(
        T=T, P=P, W=W, V=V, q=q, w_scalars=w,
        t_scalars=np.array(ts), r_scalars=np.array(rs),
    )
    return WplsModel(beta=beta, beta0=beta0, factors_used=factors_used), fact
