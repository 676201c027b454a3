"""Shared test helpers: seeded random instances and factorization checks."""

import numpy as np

from srcek.dataset import Dataset


def make_instance(rng, m, n, noise=0.3, weighted=True):
    """Random regression instance with mild signal and optional weights."""
    X = rng.normal(size=(m, n))
    y = X @ rng.normal(size=n) + noise * rng.normal(size=m)
    gamma = rng.uniform(0.5, 2.0, size=m) if weighted else None
    return Dataset(X=X, y=y, gamma=gamma)


def deflation_sequence(data, fact):
    """Rebuild the deflated predictor matrices X_0, X_1, ... from a fit."""
    Xs = [data.X.copy()]
    for k in range(fact.T.shape[1]):
        Xs.append(Xs[k] - np.outer(fact.T[:, k], fact.P[:, k]))
    return Xs


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.abs(a - b).max() / (1.0 + np.abs(b).max())
