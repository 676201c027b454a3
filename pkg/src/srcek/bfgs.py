"""Dense BFGS minimizer with value-only backtracking line search.

The optimizer consumes a blackbox returning value and gradient; during
backtracking only a value-only blackbox is queried, never a gradient.  The
inverse Hessian approximation starts as a scaled identity and receives the
standard two-rank update, skipped whenever the curvature along the step is
too small to keep the approximation positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .exceptions import LineSearchError, NumericalError

__all__ = ["BfgsOptions", "IterationRecord", "OptimizerTrace",
           "backtracking_line_search", "bfgs_minimize"]

MIN_STEP = 1e-16
CURVATURE_EPSILON = 1e-10


@dataclass
class BfgsOptions:
    initial_hessian_scale: float = 1.0
    max_iterations: int = 200
    max_evaluations: int = 10000
    grad_norm_tol: float = 1e-6
    rel_obj_change_tol: float = 1e-5
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.armijo_c1 < 1.0:
            raise ValueError("armijo_c1 must be in (0, 1)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must be in (0, 1)")
        if self.initial_step <= 0 or self.initial_hessian_scale <= 0:
            raise ValueError("initial_step and initial_hessian_scale must be positive")


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    grad_norm: float
    step: float
    n_value_evaluations: int
    n_gradient_evaluations: int


@dataclass
class OptimizerTrace:
    """Per-iteration history plus why the run stopped."""

    records: List[IterationRecord] = field(default_factory=list)
    termination_reason: str = ""
    n_iterations: int = 0
    n_value_evaluations: int = 0
    n_gradient_evaluations: int = 0
    final_objective: float = float("nan")


def backtracking_line_search(value_fn: Callable[[np.ndarray], float],
                             x: np.ndarray, direction: np.ndarray,
                             f_x: float, grad_x: np.ndarray,
                             options: Optional[BfgsOptions] = None):
    """Armijo backtracking along a descent direction, value queries only.

    Tries ``s = initial_step * backtrack_factor**i`` and accepts the first
    step with ``f(x + s d) <= f(x) + c1 s <grad, d>``.

    Returns
    -------
    (step, f_new, n_evaluations)

    Raises
    ------
    ValueError
        If ``direction`` is not a descent direction.
    LineSearchError
        If no step above ``1e-16`` is acceptable.
    """
    opts = options or BfgsOptions()
    slope = float(grad_x @ direction)
    if slope >= 0.0:
        raise ValueError(f"not a descent direction (slope {slope:.3e} >= 0)")
    step = opts.initial_step
    n_evals = 0
    while step > MIN_STEP:
        f_new = value_fn(x + step * direction)
        n_evals += 1
        if np.isfinite(f_new) and f_new <= f_x + opts.armijo_c1 * step * slope:
            return step, float(f_new), n_evals
        step *= opts.backtrack_factor
    err = LineSearchError(
        f"no acceptable step above {MIN_STEP:g} after {n_evals} evaluations"
    )
    err.n_evaluations = n_evals
    raise err


def bfgs_minimize(value_and_grad: Callable, x0, options: Optional[BfgsOptions] = None,
                  value_fn: Optional[Callable] = None):
    """Minimize a smooth function from ``x0``.

    Parameters
    ----------
    value_and_grad : callable
        ``value_and_grad(x) -> (float, ndarray)``.
    x0 : ndarray
        Starting point.
    options : BfgsOptions, optional
    value_fn : callable, optional
        ``value_fn(x) -> float`` used by the line search.  Defaults to
        dropping the gradient of ``value_and_grad``; pass the cheap path
        when one exists so backtracking never triggers gradient work.

    Returns
    -------
    (x, OptimizerTrace)

    Line-search failure is reported through the trace, not raised.
    """
    opts = options or BfgsOptions()
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    if value_fn is None:
        def value_fn(z):  # noqa: E306 - fallback closes over value_and_grad
            return value_and_grad(z)[0]

    trace = OptimizerTrace()
    f, grad = value_and_grad(x)
    trace.n_gradient_evaluations = 1
    trace.n_value_evaluations = 1
    if not (np.isfinite(f) and np.all(np.isfinite(grad))):
        raise NumericalError("objective or gradient non-finite at the start point")

    hessian_inv = opts.initial_hessian_scale * np.eye(n)
    grad_norm = float(np.linalg.norm(grad))
    trace.records.append(IterationRecord(0, float(f), grad_norm, 0.0,
                                         trace.n_value_evaluations,
                                         trace.n_gradient_evaluations))
    reason = ""
    while True:
        if grad_norm <= opts.grad_norm_tol:
            reason = "grad_tol"
            break
        if trace.n_iterations >= opts.max_iterations:
            reason = "max_iter"
            break
        if trace.n_value_evaluations >= opts.max_evaluations:
            reason = "max_eval"
            break
        direction = -hessian_inv @ grad
        if float(grad @ direction) >= 0.0:
            # Numerically lost positive definiteness; fall back to steepest
            # descent for this iterate.
            hessian_inv = opts.initial_hessian_scale * np.eye(n)
            direction = -hessian_inv @ grad
        try:
            step, f_new, n_evals = backtracking_line_search(
                value_fn, x, direction, f, grad, opts)
        except LineSearchError as exc:
            trace.n_value_evaluations += getattr(exc, "n_evaluations", 0)
            reason = "line_search_failure"
            break
        trace.n_value_evaluations += n_evals
        x_new = x + step * direction
        f_check, grad_new = value_and_grad(x_new)
        trace.n_gradient_evaluations += 1
        if not (np.isfinite(f_check) and np.all(np.isfinite(grad_new))):
            raise NumericalError("objective or gradient became non-finite")

        s = x_new - x
        yv = grad_new - grad
        sy = float(s @ yv)
        if sy > CURVATURE_EPSILON * np.linalg.norm(s) * np.linalg.norm(yv):
            rho = 1.0 / sy
            hs = hessian_inv @ yv
            # (I - rho s y') H (I - rho y s') + rho s s'
            hessian_inv = (hessian_inv
                           - rho * (np.outer(s, hs) + np.outer(hs, s))
                           + rho * rho * float(yv @ hs) * np.outer(s, s)
                           + rho * np.outer(s, s))

        rel_change = abs(f - f_new) / max(1.0, abs(f))
        x, f, grad = x_new, f_new, grad_new
        grad_norm = float(np.linalg.norm(grad))
        trace.n_iterations += 1
        trace.records.append(IterationRecord(trace.n_iterations, float(f),
                                             grad_norm, float(step),
                                             trace.n_value_evaluations,
                                             trace.n_gradient_evaluations))
        if rel_change <= opts.rel_obj_change_tol:
            reason = "rel_change"
            break

    trace.termination_reason = reason
    trace.final_objective = float(f)
    return x, trace
