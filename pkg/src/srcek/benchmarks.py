"""Timing comparison of the residual-Jacobian evaluation strategies.

Three contenders on the same instances: the object-space analytic path
(linear in the channel count), the channel-space analytic path (quadratic),
and a central-finite-difference approximation (quadratic, with a much
larger constant).  Emits plot-ready (n, method, median_seconds) rows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .dataset import Dataset
from .jacobian import residual_with_jacobian
from .numdiff import central_jacobian
from .wpls import wpls_vanilla

__all__ = ["BenchRow", "benchmark_residual_jacobian", "METHODS"]

METHODS = ("fast_analytic", "slow_analytic", "numeric")


@dataclass
class BenchRow:
    n_channels: int
    method: str
    median_seconds: float


def _residual_only(cal: Dataset, test: Dataset, n_factors: int, lam):
    model, _ = wpls_vanilla(
        Dataset(X=cal.X * lam[None, :], y=cal.y, gamma=cal.gamma), n_factors)
    return test.y - (test.X * lam[None, :]) @ model.beta - model.beta0


def benchmark_residual_jacobian(m: int = 40, m_test: int = 10,
                                n_factors: int = 5,
                                n_values: Sequence[int] = (500, 1000, 2000),
                                repeats: int = 3, seed: int = 0,
                                methods: Sequence[str] = METHODS) -> List[BenchRow]:
    """Median wall time of each Jacobian method over a grid of channel counts."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in n_values:
        cal = Dataset(X=rng.normal(size=(m, n)), y=rng.normal(size=m))
        test = Dataset(X=rng.normal(size=(m_test, n)), y=rng.normal(size=m_test))
        lam = rng.uniform(0.5, 1.5, size=n)
        runners = {
            "fast_analytic": lambda: residual_with_jacobian(cal, test, n_factors, lam),
            "slow_analytic": lambda: residual_with_jacobian(cal, test, n_factors, lam,
                                                            slow=True),
            "numeric": lambda: central_jacobian(
                lambda z: _residual_only(cal, test, n_factors, z), lam),
        }
        for method in methods:
            runner = runners[method]
            runner()  # warm caches before timing
            times = []
            for _ in range(repeats):
                start = time.perf_counter()
                runner()
                times.append(time.perf_counter() - start)
            rows.append(BenchRow(n_channels=int(n), method=method,
                                 median_seconds=float(np.median(times))))
    return rows
