"""Scikit-learn style estimators wrapping the functional core.

``WplsRegression`` is a regressor (``fit``/``predict``/``score``) and
``SrcekSelector`` a feature selector (``fit``/``transform``/``get_support``),
so both compose with pipelines, ``cross_validate`` and friends.  Response
weights enter through the standard ``sample_weight`` fit parameter.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted

from .bfgs import BfgsOptions
from .cv import CvPlan
from .dataset import Dataset, as_float_array
from .exceptions import DataValidationError
from .selection import SelectConfig, srcek_select
from .wpls import wpls_implicit, wpls_vanilla

__all__ = ["WplsRegression", "SrcekSelector"]


def _build_dataset(X, y, sample_weight) -> Dataset:
    X = as_float_array(X, "X", ndim=2)
    y = as_float_array(y, "y", ndim=1)
    gamma = None
    if sample_weight is not None:
        gamma = as_float_array(sample_weight, "sample_weight", ndim=1)
    return Dataset(X=X, y=y, gamma=gamma)


class WplsRegression(RegressorMixin, BaseEstimator):
    """Weighted partial least squares regression.

    Parameters
    ----------
    n_factors : int, default=2
        Number of latent factors; capped by the rank actually available.
    algorithm : {'deflation', 'implicit'}, default='deflation'
        Which of the two equivalent fitters to run.
    channel_weights : array-like of shape (n_features,), optional
        Per-channel multipliers applied to the predictors before fitting.
        Folded into ``coef_``, so ``predict`` consumes raw predictors.

    Attributes
    ----------
    coef_ : ndarray (n_features,)
        Effective coefficients for raw predictors.
    intercept_ : float
    n_factors_used_ : int
    factorization_ : WplsFactorization
    """

    def __init__(self, n_factors: int = 2, algorithm: str = "deflation",
                 channel_weights=None):
        self.n_factors = n_factors
        self.algorithm = algorithm
        self.channel_weights = channel_weights

    def fit(self, X, y, sample_weight=None):
        data = _build_dataset(X, y, sample_weight)
        if self.algorithm not in ("deflation", "implicit"):
            raise DataValidationError(
                f"algorithm must be 'deflation' or 'implicit', got {self.algorithm!r}"
            )
        lam = None
        if self.channel_weights is not None:
            lam = as_float_array(self.channel_weights, "channel_weights", ndim=1)
            if lam.shape[0] != data.n_channels:
                raise DataValidationError(
                    f"channel_weights has length {lam.shape[0]},"
                    f" expected {data.n_channels}"
                )
            data = Dataset(X=data.X * lam[None, :], y=data.y, gamma=data.gamma)
        fitter = wpls_vanilla if self.algorithm == "deflation" else wpls_implicit
        model, fact = fitter(data, self.n_factors)
        self.coef_ = model.beta if lam is None else lam * model.beta
        self.intercept_ = model.beta0
        self.n_factors_used_ = model.factors_used
        self.factorization_ = fact
        self.n_features_in_ = data.n_channels
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = as_float_array(X, "X", ndim=2)
        if X.shape[1] != self.n_features_in_:
            raise DataValidationError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return X @ self.coef_ + self.intercept_


class SrcekSelector(SelectorMixin, BaseEstimator):
    """Channel selection by continuous-weight optimization and unembedding.

    Parameters mirror :class:`srcek.selection.SelectConfig`; ``cv`` takes a
    prebuilt :class:`srcek.cv.CvPlan` or ``None`` for the default seeded
    Monte-Carlo plan.

    Attributes
    ----------
    support_ : bool ndarray (n_features,)
        Mask of selected channels (all False when the trivial constant
        model wins).
    report_ : SelectionReport
    weights_ : ndarray (n_features,)
        Optimized unit-norm channel weights.
    """

    def __init__(self, n_factors: int = 2, objective: str = "embedded_abic",
                 p: float = 1.0, q: float = 2.0, cv: Optional[CvPlan] = None,
                 k_max: Optional[int] = None, criterion: str = "min_abic",
                 post_optimize: bool = False, seed: int = 0,
                 optimizer_options: Optional[BfgsOptions] = None):
        self.n_factors = n_factors
        self.objective = objective
        self.p = p
        self.q = q
        self.cv = cv
        self.k_max = k_max
        self.criterion = criterion
        self.post_optimize = post_optimize
        self.seed = seed
        self.optimizer_options = optimizer_options

    def fit(self, X, y, sample_weight=None):
        data = _build_dataset(X, y, sample_weight)
        cfg = SelectConfig(
            n_factors=self.n_factors,
            objective_kind=self.objective,
            p=self.p, q=self.q,
            plan=self.cv,
            k_max=self.k_max,
            criterion=self.criterion,
            post_optimize=self.post_optimize,
            seed=self.seed,
            optimizer=self.optimizer_options or BfgsOptions(),
        )
        report = srcek_select(data, cfg)
        mask = np.zeros(data.n_channels, dtype=bool)
        mask[np.asarray(report.winner.channels, dtype=int)] = True
        self.report_ = report
        self.support_ = mask
        self.weights_ = np.asarray(report.weights)
        self.n_features_in_ = data.n_channels
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_
