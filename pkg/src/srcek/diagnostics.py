"""Finite-difference cross-checks of every analytic derivative.

Each check builds a small seeded instance, evaluates the analytic
derivative, and compares against central differences.  Returned values are
max relative errors; anything above ~1e-5 indicates a broken derivative.
"""

from __future__ import annotations

import numpy as np

from .cv import make_interleaved_plan, rmsecv_with_gradient, weighted_rmsecv
from .dataset import Dataset
from .jacobian import residual_with_jacobian, wpls_with_jacobian
from .numdiff import central_gradient, central_jacobian
from .objective import ObjectiveConfig, embedded_abic_objective, mrpq_value_and_gradient

__all__ = ["run_gradient_checks", "GRADIENT_CHECK_TOLERANCE"]

GRADIENT_CHECK_TOLERANCE = 1e-5


def _rel(err_matrix, reference) -> float:
    return float(np.abs(np.asarray(err_matrix)).max()
                 / (1.0 + np.abs(np.asarray(reference)).max()))


def run_gradient_checks(seed: int = 0) -> dict:
    """Run every analytic-vs-numeric derivative check on seeded instances."""
    rng = np.random.default_rng(seed)
    m, n, l = 20, 8, 2
    X = rng.normal(size=(m, n))
    y = X @ rng.normal(size=n) + 0.3 * rng.normal(size=m)
    gamma = rng.uniform(0.5, 2.0, size=m)
    data = Dataset(X=X, y=y, gamma=gamma)
    lam = rng.uniform(0.5, 1.5, size=n)
    plan = make_interleaved_plan(m, 5)

    results = {}

    bundle = wpls_with_jacobian(data, l, lam)
    fd_alpha = central_jacobian(
        lambda z: wpls_with_jacobian(data, l, z).alpha, lam)
    results["coefficient_preimage_jacobian"] = _rel(bundle.dalpha - fd_alpha, fd_alpha)
    fd_b0 = central_gradient(
        lambda z: wpls_with_jacobian(data, l, z).beta0, lam)
    results["intercept_gradient"] = _rel(bundle.grad_beta0 - fd_b0, fd_b0)

    cal = data.select_objects(np.arange(12))
    test = data.select_objects(np.arange(12, m))
    rb = residual_with_jacobian(cal, test, l, lam)
    fd_res = central_jacobian(
        lambda z: residual_with_jacobian(cal, test, l, z).residual, lam)
    results["residual_jacobian"] = _rel(rb.dresidual - fd_res, fd_res)

    cv = rmsecv_with_gradient(data, plan, l, lam)
    fd_cv = central_gradient(
        lambda z: weighted_rmsecv(data, plan, l, z).rmsecv, lam)
    results["rmsecv_gradient"] = _rel(cv.gradient - fd_cv, fd_cv)

    _, g_size = mrpq_value_and_gradient(lam, 1.0, 2.0)
    fd_size = central_gradient(
        lambda z: mrpq_value_and_gradient(z, 1.0, 2.0)[0], lam)
    results["size_surrogate_gradient"] = _rel(g_size - fd_size, fd_size)

    cfg = ObjectiveConfig(kind="embedded_abic", n_factors=l, plan=plan,
                          p=1.0, q=2.0)
    crit = embedded_abic_objective(data, cfg, lam)
    fd_obj = central_gradient(
        lambda z: embedded_abic_objective(data, cfg, z).value, lam)
    results["embedded_criterion_gradient"] = _rel(crit.gradient - fd_obj, fd_obj)

    return results
