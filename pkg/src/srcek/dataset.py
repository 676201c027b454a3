"""Dataset container and input validation helpers.

A dataset bundles the predictor matrix ``X`` (one column per channel), the
response vector ``y`` and an optional vector of positive response weights
``gamma``.  All numerical code in this package consumes :class:`Dataset`
instances; the validation helpers are also reused by the sklearn-style
estimators.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .exceptions import DataValidationError

__all__ = ["Dataset", "as_float_array", "check_weight_vector"]


def as_float_array(a, name: str, ndim: int) -> np.ndarray:
    """Coerce to a float64 array of the given rank, rejecting non-finite entries."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != ndim:
        raise DataValidationError(
            f"{name} must be {ndim}-dimensional, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise DataValidationError(f"{name} contains non-finite entries")
    return arr


def check_weight_vector(lam, n_channels: int, require_nonzero: bool = False) -> np.ndarray:
    """Validate a per-channel weight vector.

    Weights may be negative (orderings use magnitudes), but must be finite,
    and nonzero when a Jacobian with respect to them is requested.
    """
    arr = as_float_array(lam, "weights", ndim=1)
    if arr.shape[0] != n_channels:
        raise DataValidationError(
            f"weights have length {arr.shape[0]}, expected {n_channels}"
        )
    if require_nonzero and np.any(arr == 0.0):
        j = int(np.flatnonzero(arr == 0.0)[0])
        raise DataValidationError(f"weight for channel {j} is zero")
    return arr


@dataclass
class Dataset:
    """Predictors, responses and response weights for one set of objects.

    Parameters
    ----------
    X : ndarray of shape (m, n)
        Predictor matrix, one row per object, one column per channel.
    y : ndarray of shape (m,)
        Response vector.
    gamma : ndarray of shape (m,), optional
        Strictly positive response weights.  Defaults to all ones
        (unweighted regression).
    channel_labels : sequence of n str, optional
    object_labels : sequence of m str, optional
    """

    X: np.ndarray
    y: np.ndarray
    gamma: Optional[np.ndarray] = None
    channel_labels: Optional[Sequence[str]] = field(default=None, repr=False)
    object_labels: Optional[Sequence[str]] = field(default=None, repr=False)

    def __post_init__(self):
        self.X = as_float_array(self.X, "X", ndim=2)
        self.y = as_float_array(self.y, "y", ndim=1)
        m, n = self.X.shape
        # Model fitting needs m >= 2 (checked by the fitting routines); a
        # single-object container is allowed so that it can hold e.g. a
        # one-object cross-validation test group.
        if m < 1:
            raise DataValidationError("need at least 1 object")
        if n < 1:
            raise DataValidationError("need at least 1 channel")
        if self.y.shape[0] != m:
            raise DataValidationError(
                f"y has length {self.y.shape[0]}, expected {m}"
            )
        if self.gamma is None:
            self.gamma = np.ones(m)
        else:
            self.gamma = as_float_array(self.gamma, "gamma", ndim=1)
            if self.gamma.shape[0] != m:
                raise DataValidationError(
                    f"gamma has length {self.gamma.shape[0]}, expected {m}"
                )
            if np.any(self.gamma <= 0.0):
                raise DataValidationError("gamma must be strictly positive")
        if self.channel_labels is not None and len(self.channel_labels) != n:
            raise DataValidationError(
                f"got {len(self.channel_labels)} channel labels for {n} channels"
            )
        if self.object_labels is not None and len(self.object_labels) != m:
            raise DataValidationError(
                f"got {len(self.object_labels)} object labels for {m} objects"
            )

    @property
    def n_objects(self) -> int:
        return self.X.shape[0]

    @property
    def n_channels(self) -> int:
        return self.X.shape[1]

    def select_objects(self, indices) -> "Dataset":
        """Row subset (e.g. one cross-validation group), labels carried along."""
        idx = np.asarray(indices, dtype=int)
        labels = None
        if self.object_labels is not None:
            labels = [self.object_labels[i] for i in idx]
        return replace(
            self,
            X=self.X[idx],
            y=self.y[idx],
            gamma=self.gamma[idx],
            object_labels=labels,
        )

    def select_channels(self, indices) -> "Dataset":
        """Column subset (a candidate channel set), labels carried along."""
        idx = np.asarray(indices, dtype=int)
        labels = None
        if self.channel_labels is not None:
            labels = [self.channel_labels[j] for j in idx]
        return replace(self, X=self.X[:, idx], channel_labels=labels)
