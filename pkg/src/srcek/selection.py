"""Turning optimized channel weights back into a concrete channel subset.

After the continuous optimization, channel importance is read off the weight
vector in two ways ("pragmas"): the magnitude of the weight itself, and the
magnitude of weight times fitted regression coefficient.  Each ordering
induces a nested family of candidate subsets (the k most important channels
for k = l .. k_max); every candidate is scored by cross validation and by
the information criterion, the constant-response trivial model is scored
alongside, and the configured criterion picks the winner across both
orderings.  ``srcek_select`` runs the whole pipeline: autoscaled start,
BFGS minimization, unembedding, scoring, selection and an optional
re-optimization restricted to the winning subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import List, Optional

import numpy as np

from .bfgs import BfgsOptions, OptimizerTrace, bfgs_minimize
from .cv import CvPlan, default_mc_sizes, make_mc_plan, weighted_rmsecv
from .data_io import autoscale_weights
from .dataset import Dataset, check_weight_vector
from .exceptions import DataValidationError, PerfectFitError
from .objective import ObjectiveConfig, discrete_abic, make_objective
from .wpls import WplsModel, wpls_vanilla

__all__ = [
    "ORDERING_PRAGMAS", "ImportanceOrdering", "CandidateRow", "TrivialModel",
    "SelectConfig", "Winner", "PostOptimization", "SelectionReport",
    "importance_orderings", "score_model_sequence", "trivial_model_row",
    "srcek_select",
]

ORDERING_PRAGMAS = ("lambda_magnitude", "lambda_times_beta")
CRITERIA = ("min_rmsecv", "min_abic")


@dataclass
class ImportanceOrdering:
    """Channels ranked by decreasing importance under one pragma."""

    pragma: str
    ranked_channels: np.ndarray
    scores: np.ndarray

    def to_dict(self) -> dict:
        return {
            "pragma": self.pragma,
            "ranked_channels": [int(c) for c in self.ranked_channels],
            "scores": [float(s) for s in self.scores],
        }


def importance_orderings(lam, model: WplsModel) -> List[ImportanceOrdering]:
    """Both orderings for a weight vector and the model fitted under it.

    Ties rank the lower channel index first, so orderings are deterministic.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape != model.beta.shape:
        raise DataValidationError(
            f"weights have shape {lam.shape}, model has {model.beta.shape}"
        )
    out = []
    for pragma in ORDERING_PRAGMAS:
        mags = np.abs(lam) if pragma == "lambda_magnitude" else np.abs(lam * model.beta)
        ranked = np.argsort(-mags, kind="stable")
        out.append(ImportanceOrdering(pragma=pragma, ranked_channels=ranked,
                                      scores=mags[ranked]))
    return out


@dataclass
class CandidateRow:
    """One scored model: the top-k channels of one ordering."""

    pragma: str
    k: int
    channels: List[int]
    rmsecv: float
    msecv: float
    abic: float

    def criterion_value(self, criterion: str) -> float:
        return self.rmsecv if criterion == "min_rmsecv" else self.abic

    def to_dict(self) -> dict:
        return {
            "pragma": self.pragma, "k": self.k,
            "channels": [int(c) for c in self.channels],
            "rmsecv": float(self.rmsecv), "msecv": float(self.msecv),
            "abic": float(self.abic),
        }


@dataclass
class TrivialModel:
    """Constant-response baseline: weighted mean, ignoring all predictors."""

    mean: float
    variance: float
    rmsecv: float
    msecv: float
    abic: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}


def _abic_or_inf(msecv: float, m: int, n_factors: int, k: int) -> float:
    # A perfect fit drives the log criterion to -inf; keep that ordering
    # instead of erroring out of the scoring loop.
    if msecv <= 0.0:
        return float("-inf")
    return discrete_abic(msecv, m, n_factors, k)


def trivial_model_row(data: Dataset, plan: CvPlan, n_factors: int) -> TrivialModel:
    """Cross-validated constant model plus its weighted moments."""
    y, gamma = data.y, data.gamma
    weight = gamma.sum()
    mean = float(gamma @ y / weight)
    variance = float(gamma @ ((y - mean) ** 2) / weight)
    fold_mse = []
    for cal, test in plan.folds:
        gc, gt = gamma[cal], gamma[test]
        mu = float(gc @ y[cal] / gc.sum())
        e = y[test] - mu
        fold_mse.append(float(gt @ (e * e) / gt.sum()))
    msecv = float(np.mean(fold_mse))
    return TrivialModel(
        mean=mean, variance=variance, rmsecv=float(np.sqrt(msecv)),
        msecv=msecv, abic=_abic_or_inf(msecv, data.n_objects, n_factors, 0),
    )


def score_model_sequence(data: Dataset, ordering: ImportanceOrdering,
                         n_factors: int, plan: CvPlan, k_max: int, lam,
                         include_trivial: bool = True) -> List[CandidateRow]:
    """Score the nested subsets of one ordering for k = n_factors .. k_max.

    Each subset keeps the optimized weights of its channels, except at
    k == n_factors where the fit is weighting-invariant and unit weights are
    used.  The trivial model is appended as a k = 0 row unless disabled.
    """
    n = data.n_channels
    if not n_factors <= k_max <= n:
        raise DataValidationError(
            f"need n_factors <= k_max <= n_channels, got {n_factors}, {k_max}, {n}"
        )
    lam = check_weight_vector(lam, n)
    m = data.n_objects
    rows = []
    if include_trivial:
        tm = trivial_model_row(data, plan, n_factors)
        rows.append(CandidateRow(pragma="trivial", k=0, channels=[],
                                 rmsecv=tm.rmsecv, msecv=tm.msecv, abic=tm.abic))
    for k in range(n_factors, k_max + 1):
        channels = ordering.ranked_channels[:k]
        sub = data.select_channels(channels)
        sub_lam = np.ones(k) if k == n_factors else lam[channels]
        cv = weighted_rmsecv(sub, plan, n_factors, sub_lam)
        rows.append(CandidateRow(
            pragma=ordering.pragma, k=k,
            channels=[int(c) for c in channels],
            rmsecv=cv.rmsecv, msecv=cv.msecv,
            abic=_abic_or_inf(cv.msecv, m, n_factors, k),
        ))
    return rows


@dataclass
class SelectConfig:
    """Configuration of the full selection pipeline."""

    n_factors: int
    objective_kind: str = "embedded_abic"
    p: float = 1.0
    q: float = 2.0
    plan: Optional[CvPlan] = None
    k_max: Optional[int] = None
    criterion: str = "min_abic"
    post_optimize: bool = False
    seed: int = 0
    optimizer: BfgsOptions = field(default_factory=BfgsOptions)

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise DataValidationError(
                f"criterion must be one of {CRITERIA}, got {self.criterion!r}"
            )


@dataclass
class Winner:
    """The selected model: a channel subset or the trivial baseline."""

    kind: str
    pragma: str
    k: int
    channels: List[int]
    n_factors: int
    criterion: str
    criterion_value: float
    rmsecv: float
    abic: float
    weights: List[float]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "pragma": self.pragma, "k": self.k,
            "channels": [int(c) for c in self.channels],
            "n_factors": self.n_factors, "criterion": self.criterion,
            "criterion_value": float(self.criterion_value),
            "rmsecv": float(self.rmsecv), "abic": float(self.abic),
            "weights": [float(w) for w in self.weights],
        }


@dataclass
class PostOptimization:
    """Result of re-optimizing weights on the frozen winning subset."""

    weights: List[float]
    rmsecv: float
    abic: float
    termination_reason: str
    n_iterations: int

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "rmsecv": float(self.rmsecv), "abic": float(self.abic),
            "termination_reason": self.termination_reason,
            "n_iterations": self.n_iterations,
        }


def _trace_dict(trace: OptimizerTrace) -> dict:
    return {
        "termination_reason": trace.termination_reason,
        "n_iterations": trace.n_iterations,
        "n_value_evaluations": trace.n_value_evaluations,
        "n_gradient_evaluations": trace.n_gradient_evaluations,
        "final_objective": float(trace.final_objective),
        "records": [
            {
                "iteration": r.iteration,
                "objective": float(r.objective),
                "grad_norm": float(r.grad_norm),
                "step": float(r.step),
                "n_value_evaluations": r.n_value_evaluations,
                "n_gradient_evaluations": r.n_gradient_evaluations,
            }
            for r in trace.records
        ],
    }


@dataclass
class SelectionReport:
    """Everything a selection run produced, in a serialization-ready form."""

    config: dict
    weights: List[float]
    optimizer: dict
    trivial_model: TrivialModel
    candidates: List[CandidateRow]
    winner: Winner
    post_optimization: Optional[PostOptimization] = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "weights": [float(w) for w in self.weights],
            "optimizer": self.optimizer,
            "trivial_model": self.trivial_model.to_dict(),
            "candidates": [c.to_dict() for c in self.candidates],
            "winner": self.winner.to_dict(),
            "post_optimization":
                None if self.post_optimization is None
                else self.post_optimization.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionReport":
        return cls(
            config=d["config"],
            weights=[float(w) for w in d["weights"]],
            optimizer=d["optimizer"],
            trivial_model=TrivialModel(**d["trivial_model"]),
            candidates=[CandidateRow(**c) for c in d["candidates"]],
            winner=Winner(**d["winner"]),
            post_optimization=None if d.get("post_optimization") is None
            else PostOptimization(**d["post_optimization"]),
        )


def _pick_winner(rows: List[CandidateRow], criterion: str):
    best = None
    for row in rows:
        value = row.criterion_value(criterion)
        if best is None or value < best.criterion_value(criterion):
            best = row
    return best


def srcek_select(data: Dataset, cfg: SelectConfig) -> SelectionReport:
    """Run the complete selection pipeline on a dataset.

    The starting weights are the reciprocal sample standard deviations of
    the channels; BFGS minimizes the configured objective; the optimized
    weights are normalized to unit norm (free, by scale invariance of the
    effective model) and unembedded through both ordering pragmas; the
    criterion arbitrates across all scored candidates and the trivial
    model.  Fully deterministic for a given (data, config, seed).
    """
    m, n = data.n_objects, data.n_channels
    plan = cfg.plan if cfg.plan is not None else make_mc_plan(m, seed=cfg.seed)
    k_max = cfg.k_max if cfg.k_max is not None else min(n, 50)
    k_max = max(cfg.n_factors, min(k_max, n))

    obj_cfg = ObjectiveConfig(kind=cfg.objective_kind, n_factors=cfg.n_factors,
                              plan=plan, p=cfg.p, q=cfg.q)
    lam0 = autoscale_weights(data)
    value_and_grad, value_only = make_objective(data, obj_cfg)
    try:
        lam_opt, trace = bfgs_minimize(value_and_grad, lam0, cfg.optimizer,
                                       value_fn=value_only)
    except PerfectFitError:
        # The objective is already singular (zero CV error): skip the
        # continuous optimization and unembed the starting weights.
        lam_opt = lam0
        trace = OptimizerTrace(termination_reason="perfect_fit")

    norm = float(np.linalg.norm(lam_opt))
    lam_unit = lam_opt / norm if norm > 0 else lam0 / np.linalg.norm(lam0)

    weighted = Dataset(X=data.X * lam_unit[None, :], y=data.y, gamma=data.gamma)
    full_model, _ = wpls_vanilla(weighted, cfg.n_factors)
    orderings = importance_orderings(lam_unit, full_model)

    trivial = trivial_model_row(data, plan, cfg.n_factors)
    candidates = [CandidateRow(pragma="trivial", k=0, channels=[],
                               rmsecv=trivial.rmsecv, msecv=trivial.msecv,
                               abic=trivial.abic)]
    for ordering in orderings:
        candidates.extend(score_model_sequence(
            data, ordering, cfg.n_factors, plan, k_max, lam_unit,
            include_trivial=False))

    winner_row = _pick_winner(candidates, cfg.criterion)
    if winner_row.pragma == "trivial":
        winner = Winner(kind="trivial", pragma="trivial", k=0, channels=[],
                        n_factors=cfg.n_factors, criterion=cfg.criterion,
                        criterion_value=winner_row.criterion_value(cfg.criterion),
                        rmsecv=winner_row.rmsecv, abic=winner_row.abic,
                        weights=[])
    else:
        channels = np.asarray(winner_row.channels, dtype=int)
        w = (np.ones(len(channels)) if winner_row.k == cfg.n_factors
             else lam_unit[channels])
        winner = Winner(kind="subset", pragma=winner_row.pragma,
                        k=winner_row.k, channels=winner_row.channels,
                        n_factors=cfg.n_factors, criterion=cfg.criterion,
                        criterion_value=winner_row.criterion_value(cfg.criterion),
                        rmsecv=winner_row.rmsecv, abic=winner_row.abic,
                        weights=[float(x) for x in w])

    post = None
    if cfg.post_optimize and winner.kind == "subset":
        post = _post_optimize(data, cfg, plan, winner)

    config_echo = {
        "n_factors": cfg.n_factors,
        "objective_kind": cfg.objective_kind,
        "p": float(cfg.p), "q": float(cfg.q),
        "criterion": cfg.criterion,
        "k_max": int(k_max),
        "post_optimize": bool(cfg.post_optimize),
        "seed": int(cfg.seed),
        "plan": plan.provenance,
        "n_folds": plan.n_folds,
    }
    return SelectionReport(
        config=config_echo,
        weights=[float(x) for x in lam_unit],
        optimizer=_trace_dict(trace),
        trivial_model=trivial,
        candidates=candidates,
        winner=winner,
        post_optimization=post,
    )


def _post_optimize(data: Dataset, cfg: SelectConfig, plan: CvPlan,
                   winner: Winner) -> PostOptimization:
    channels = np.asarray(winner.channels, dtype=int)
    sub = data.select_channels(channels)
    obj_cfg = ObjectiveConfig(kind=cfg.objective_kind, n_factors=cfg.n_factors,
                              plan=plan, p=cfg.p, q=cfg.q)
    value_and_grad, value_only = make_objective(sub, obj_cfg)
    start = np.asarray(winner.weights, dtype=float)
    try:
        lam_sub, trace = bfgs_minimize(value_and_grad, start, cfg.optimizer,
                                       value_fn=value_only)
        reason = trace.termination_reason
        iterations = trace.n_iterations
    except PerfectFitError:
        lam_sub = start
        reason = "perfect_fit"
        iterations = 0
    norm = float(np.linalg.norm(lam_sub))
    if norm > 0:
        lam_sub = lam_sub / norm
    cv = weighted_rmsecv(sub, plan, cfg.n_factors, lam_sub)
    return PostOptimization(
        weights=[float(x) for x in lam_sub],
        rmsecv=cv.rmsecv,
        abic=_abic_or_inf(cv.msecv, data.n_objects, cfg.n_factors, winner.k),
        termination_reason=reason,
        n_iterations=iterations,
    )
