"""Objective functions for continuous channel selection.

The subset-size surrogate is a p-norm/q-norm ratio raised to the power
``p q / (q - p)``.  It is scale invariant, equals the number of nonzero
entries on any scaled binary vector, and is differentiable wherever no
entry is zero, which makes it a usable stand-in for "number of retained
channels" inside a smooth objective.

``discrete_abic`` is the information criterion used to compare fitted
subsets: ``ln(mse) + k ln(m) / (m - l - 1)``, with natural logarithms in
both positions.  ``embedded_abic_objective`` splices the surrogate into
that criterion so the whole thing can be minimized over continuous channel
weights, and also serves plain RMSECV minimization when configured so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cv import CvPlan, rmsecv_with_gradient, weighted_rmsecv
from .dataset import Dataset
from .exceptions import DataValidationError, PerfectFitError

__all__ = [
    "ObjectiveConfig", "CriterionValue", "mrpq_value_and_gradient",
    "discrete_abic", "embedded_abic_objective", "make_objective",
]

# Lower clamp on |lam_j| inside the surrogate gradient only: for p < 1 the
# exact gradient is unbounded as an entry crosses zero.
GRADIENT_MAGNITUDE_FLOOR = 1e-12

OBJECTIVE_KINDS = ("rmsecv", "embedded_abic")


@dataclass
class ObjectiveConfig:
    """What to minimize: plain RMSECV or the embedded information criterion."""

    kind: str
    n_factors: int
    plan: CvPlan
    p: float = 1.0
    q: float = 2.0

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise DataValidationError(
                f"objective kind must be one of {OBJECTIVE_KINDS}, got {self.kind!r}"
            )
        if not (0.0 < self.p < self.q and math.isfinite(self.q)):
            raise DataValidationError(
                f"need 0 < p < q finite, got p={self.p}, q={self.q}"
            )


@dataclass
class CriterionValue:
    """Objective value, analytic gradient and the two additive parts."""

    value: float
    gradient: np.ndarray
    ln_msecv_term: float
    size_term: float


def mrpq_value_and_gradient(lam, p: float, q: float):
    """Scale-invariant subset-size surrogate ``(||lam||_p/||lam||_q)^(pq/(q-p))``.

    Returns the value and its gradient.  Magnitudes are used throughout, so
    negative weights are handled; entries are clamped away from zero inside
    the gradient (the value is exact).
    """
    lam = np.asarray(lam, dtype=float)
    if not 0.0 < p < q:
        raise DataValidationError(f"need 0 < p < q, got p={p}, q={q}")
    mags = np.abs(lam)
    top = mags.max(initial=0.0)
    if top == 0.0:
        raise DataValidationError("weight vector is identically zero")
    # Normalize by the largest magnitude so the power sums stay in range.
    scaled = mags / top
    sum_p = float((scaled ** p).sum())
    sum_q = float((scaled ** q).sum())
    exponent = p * q / (q - p)
    # (||lam||_p / ||lam||_q)^e  ==  (sum_p^(1/p) / sum_q^(1/q))^e
    value = math.exp(exponent * (math.log(sum_p) / p - math.log(sum_q) / q))

    clamped = np.maximum(scaled, GRADIENT_MAGNITUDE_FLOOR / top)
    gradient = value * exponent * np.sign(lam) * (
        clamped ** (p - 1.0) / sum_p - clamped ** (q - 1.0) / sum_q
    ) / top
    return value, gradient


def discrete_abic(mse: float, m: int, n_factors: int, n_channels: int,
                  use_cv: bool = True) -> float:
    """Reduced-rank information criterion ``ln(mse) + k ln(m) / (m - l - 1)``.

    ``mse`` is a cross-validation MSE (``use_cv=True``) or a resubstitution
    MSE; the flag only records which kind was supplied, the arithmetic is
    identical.  Both logarithms are natural.
    """
    del use_cv
    if mse <= 0.0:
        raise PerfectFitError("mse must be positive for the log criterion")
    if m <= n_factors + 1:
        raise DataValidationError(
            f"need more than {n_factors + 1} objects for {n_factors} factors, got {m}"
        )
    return math.log(mse) + n_channels * math.log(m) / (m - n_factors - 1)


def embedded_abic_objective(data: Dataset, cfg: ObjectiveConfig, lam) -> CriterionValue:
    """Value and gradient of the configured continuous objective.

    With ``kind == 'embedded_abic'`` this is
    ``ln(MSECV(lam)) + ln(m) mrpq(lam) / (m - l - 1)`` with gradient
    ``grad(MSECV)/MSECV + ln(m) grad(mrpq) / (m - l - 1)``.  With
    ``kind == 'rmsecv'`` the size term is dropped and the value is the
    RMSECV itself.
    """
    cv = rmsecv_with_gradient(data, cfg.plan, cfg.n_factors, lam)
    if cfg.kind == "rmsecv":
        if cv.gradient is None:
            raise PerfectFitError("RMSECV is zero; gradient undefined")
        return CriterionValue(value=cv.rmsecv, gradient=cv.gradient,
                              ln_msecv_term=cv.rmsecv, size_term=0.0)
    if cv.msecv <= 0.0 or cv.gradient is None:
        raise PerfectFitError("MSECV is zero; log objective undefined")
    m = data.n_objects
    denom = m - cfg.n_factors - 1
    if denom <= 0:
        raise DataValidationError(
            f"need more than {cfg.n_factors + 1} objects, got {m}"
        )
    size_value, size_grad = mrpq_value_and_gradient(lam, cfg.p, cfg.q)
    scale = math.log(m) / denom
    grad_msecv = 2.0 * cv.rmsecv * cv.gradient
    return CriterionValue(
        value=math.log(cv.msecv) + scale * size_value,
        gradient=grad_msecv / cv.msecv + scale * size_grad,
        ln_msecv_term=math.log(cv.msecv),
        size_term=scale * size_value,
    )


def make_objective(data: Dataset, cfg: ObjectiveConfig):
    """Closures for the optimizer: full value+gradient, and value-only.

    The value-only path skips every Jacobian and is what the line search
    should call.
    """

    def value_and_gradient(lam):
        r = embedded_abic_objective(data, cfg, lam)
        return r.value, r.gradient

    def value_only(lam):
        cv = weighted_rmsecv(data, cfg.plan, cfg.n_factors, lam)
        if cfg.kind == "rmsecv":
            return cv.rmsecv
        if cv.msecv <= 0.0:
            raise PerfectFitError("MSECV is zero; log objective undefined")
        m = data.n_objects
        scale = math.log(m) / (m - cfg.n_factors - 1)
        size_value, _ = mrpq_value_and_gradient(lam, cfg.p, cfg.q)
        return math.log(cv.msecv) + scale * size_value

    return value_and_gradient, value_only
