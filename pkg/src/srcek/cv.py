"""Cross-validation plans and the weighted RMSECV objective.

A plan is a list of (calibration, test) index pairs.  Two constructors are
provided: seeded Monte-Carlo delete-d partitions (consistent subset
selection wants the deleted fraction to grow with the sample; the default
keeps ``m^(3/4)`` objects for calibration and ``2 m`` folds) and
deterministic interleaved groups (fold g tests objects g, g+G, g+2G, ...).

``weighted_rmsecv`` fits one model per fold on the weighted calibration
predictors and aggregates weighted test-group errors;
``rmsecv_with_gradient`` additionally assembles the exact gradient with
respect to the channel weights from per-fold residual Jacobians.  Folds are
always reduced in plan order, so results do not depend on how callers
schedule the independent fold evaluations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ._batched import (batched_fold_mse, batched_fold_mse_and_gradient,
                       stackable_folds)
from .dataset import Dataset, check_weight_vector
from .exceptions import DataValidationError
from .jacobian import residual_with_jacobian
from .wpls import wpls_vanilla

__all__ = [
    "CvPlan", "CvValue", "make_mc_plan", "make_interleaved_plan",
    "make_msep_plan", "weighted_rmsecv", "rmsecv_with_gradient",
    "plan_to_text", "plan_from_text", "save_plan", "load_plan",
]

Fold = Tuple[np.ndarray, np.ndarray]


@dataclass
class CvPlan:
    """Cross-validation plan: (calibration, test) index pairs plus provenance."""

    folds: List[Fold]
    provenance: dict = field(default_factory=lambda: {"kind": "explicit"})

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    def validate(self, n_objects: int, allow_overlap: bool = False) -> None:
        if not self.folds:
            raise DataValidationError("plan has no folds")
        for i, (cal, test) in enumerate(self.folds):
            if test.size == 0:
                raise DataValidationError(f"fold {i} has an empty test group")
            if cal.size == 0:
                raise DataValidationError(f"fold {i} has an empty calibration group")
            both = np.concatenate([cal, test])
            if both.min() < 0 or both.max() >= n_objects:
                raise DataValidationError(
                    f"fold {i} references objects outside 0..{n_objects - 1}"
                )
            if not allow_overlap and np.intersect1d(cal, test).size:
                raise DataValidationError(
                    f"fold {i} has overlapping calibration and test groups"
                )


def _as_fold(cal, test) -> Fold:
    return (np.sort(np.asarray(cal, dtype=int)),
            np.sort(np.asarray(test, dtype=int)))


def default_mc_sizes(m: int) -> Tuple[int, int]:
    """Default (test_size, n_folds): delete m - round(m^0.75), with 2m folds."""
    return m - int(np.rint(m ** 0.75)), 2 * m


def make_mc_plan(m: int, test_size: Optional[int] = None,
                 n_folds: Optional[int] = None, seed: int = 0) -> CvPlan:
    """Monte-Carlo delete-d plan: uniform random d-subsets as test groups.

    Folds are drawn independently (repeats across folds are allowed) and the
    same seed always yields the same plan.
    """
    default_d, default_j = default_mc_sizes(m)
    d = default_d if test_size is None else int(test_size)
    j = default_j if n_folds is None else int(n_folds)
    if j < 1:
        raise DataValidationError(f"need at least one fold, got {j}")
    if not 1 <= d <= m - 2:
        raise DataValidationError(
            f"test size {d} leaves fewer than 2 of {m} objects for calibration"
        )
    rng = np.random.default_rng(seed)
    folds = []
    for _ in range(j):
        perm = rng.permutation(m)
        folds.append(_as_fold(perm[d:], perm[:d]))
    return CvPlan(folds=folds, provenance={
        "kind": "monte_carlo", "m": m, "test_size": d, "n_folds": j,
        "seed": int(seed),
    })


def make_interleaved_plan(m: int, n_groups: int) -> CvPlan:
    """Deterministic interleaved plan: fold g tests objects g, g+G, g+2G, ..."""
    g = int(n_groups)
    if not 2 <= g <= m:
        raise DataValidationError(
            f"group count must be in [2, {m}] for {m} objects, got {g}"
        )
    all_idx = np.arange(m)
    folds = []
    for start in range(g):
        test = np.arange(start, m, g)
        folds.append(_as_fold(np.setdiff1d(all_idx, test), test))
    return CvPlan(folds=folds, provenance={
        "kind": "interleaved", "m": m, "n_groups": g,
    })


def make_msep_plan(m: int) -> CvPlan:
    """Degenerate plan whose single fold calibrates and tests on all objects.

    Evaluating RMSECV on it yields the (root) mean squared error of
    prediction, the resubstitution error used by the plain information
    criterion.
    """
    idx = np.arange(m)
    return CvPlan(folds=[(idx, idx.copy())],
                  provenance={"kind": "msep", "m": m})


@dataclass
class CvValue:
    """Aggregated cross-validation error, optionally with its gradient."""

    rmsecv: float
    msecv: float
    per_fold_mse: np.ndarray
    gradient: Optional[np.ndarray] = None


def _check_fold_fit(cal: np.ndarray, n_factors: int, fold_index: int) -> None:
    if cal.size < n_factors + 1:
        raise DataValidationError(
            f"fold {fold_index}: calibration group of {cal.size} objects is too"
            f" small for {n_factors} factors"
        )


def weighted_rmsecv(data: Dataset, plan: CvPlan, n_factors: int, lam) -> CvValue:
    """Weighted RMSECV of an l-factor WPLS model on weighted predictors.

    For each fold a model is fitted on ``X[cal] @ diag(lam)`` and evaluated
    on ``X[test] @ diag(lam)``; the fold's mean squared error is the
    response-weighted residual norm divided by the total test weight, and
    RMSECV is the square root of the fold mean.
    """
    lam = check_weight_vector(lam, data.n_channels, require_nonzero=True)
    plan.validate(data.n_objects, allow_overlap=True)
    X, y, gamma = data.X, data.y, data.gamma
    for i, (cal, _) in enumerate(plan.folds):
        _check_fold_fit(cal, n_factors, i)

    # Equal-sized folds evaluate as one batched stack; the per-fold loop
    # below is the reference path and handles rank termination.
    stacked = stackable_folds(plan)
    if stacked is not None:
        batched = batched_fold_mse(X, y, gamma, stacked[0], stacked[1],
                                   n_factors, lam)
        if batched is not None:
            msecv = float(batched.mean())
            return CvValue(rmsecv=float(np.sqrt(msecv)), msecv=msecv,
                           per_fold_mse=batched)

    fold_mse = np.zeros(plan.n_folds)
    for i, (cal, test) in enumerate(plan.folds):
        cal_data = Dataset(X=X[cal] * lam[None, :], y=y[cal], gamma=gamma[cal])
        model, _ = wpls_vanilla(cal_data, n_factors)
        pred = (X[test] * lam[None, :]) @ model.beta + model.beta0
        e = y[test] - pred
        gt = gamma[test]
        fold_mse[i] = float(gt @ (e * e) / gt.sum())
    msecv = float(fold_mse.mean())
    return CvValue(rmsecv=float(np.sqrt(msecv)), msecv=msecv,
                   per_fold_mse=fold_mse)


def rmsecv_with_gradient(data: Dataset, plan: CvPlan, n_factors: int, lam) -> CvValue:
    """Weighted RMSECV and its exact gradient in the channel weights.

    The value matches :func:`weighted_rmsecv`; the gradient sums per-fold
    residual-Jacobian/residual products.  When the fit is perfect (RMSECV
    is zero) the gradient of the square root is singular and the ``gradient``
    field is ``None``.
    """
    lam = check_weight_vector(lam, data.n_channels, require_nonzero=True)
    plan.validate(data.n_objects, allow_overlap=True)
    X, y, gamma = data.X, data.y, data.gamma
    for i, (cal, _) in enumerate(plan.folds):
        _check_fold_fit(cal, n_factors, i)

    fold_mse = None
    accum = None
    stacked = stackable_folds(plan)
    if stacked is not None:
        batched = batched_fold_mse_and_gradient(X, y, gamma, stacked[0],
                                                stacked[1], n_factors, lam)
        if batched is not None:
            fold_mse, accum = batched
    if fold_mse is None:
        fold_mse = np.zeros(plan.n_folds)
        accum = np.zeros(data.n_channels)
        for i, (cal, test) in enumerate(plan.folds):
            cal_data = Dataset(X=X[cal], y=y[cal], gamma=gamma[cal])
            test_data = Dataset(X=X[test], y=y[test], gamma=gamma[test])
            rb = residual_with_jacobian(cal_data, test_data, n_factors, lam)
            gt = gamma[test]
            weight = gt.sum()
            fold_mse[i] = float(gt @ (rb.residual * rb.residual) / weight)
            accum += rb.dresidual.T @ (gt * rb.residual) / weight
    msecv = float(fold_mse.mean())
    rmsecv = float(np.sqrt(msecv))
    if rmsecv == 0.0:
        return CvValue(rmsecv=rmsecv, msecv=msecv, per_fold_mse=fold_mse,
                       gradient=None)
    gradient = accum / (rmsecv * plan.n_folds)
    return CvValue(rmsecv=rmsecv, msecv=msecv, per_fold_mse=fold_mse,
                   gradient=gradient)


def plan_to_text(plan: CvPlan) -> str:
    """Serialize a plan; one fold per line, 0-based indices."""
    lines = ["# provenance: " + json.dumps(plan.provenance, sort_keys=True)]
    for cal, test in plan.folds:
        lines.append(
            "cal: " + ",".join(str(i) for i in cal)
            + " | test: " + ",".join(str(i) for i in test)
        )
    return "\n".join(lines) + "\n"


def plan_from_text(text: str) -> CvPlan:
    provenance = {"kind": "explicit"}
    folds = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("provenance:"):
                provenance = json.loads(body[len("provenance:"):])
            continue
        try:
            cal_part, test_part = line.split("|")
            cal = [int(s) for s in cal_part.split(":", 1)[1].split(",") if s.strip()]
            test = [int(s) for s in test_part.split(":", 1)[1].split(",") if s.strip()]
        except (ValueError, IndexError) as exc:
            raise DataValidationError(
                f"line {lineno}: cannot parse fold line {line!r}"
            ) from exc
        folds.append(_as_fold(cal, test))
    if not folds:
        raise DataValidationError("plan text contains no folds")
    return CvPlan(folds=folds, provenance=provenance)


def save_plan(plan: CvPlan, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(plan_to_text(plan))


def load_plan(path) -> CvPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return plan_from_text(fh.read())
