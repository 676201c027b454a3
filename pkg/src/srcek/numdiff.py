"""Central finite-difference derivatives, used as test oracles and fallbacks.

The step is scaled per coordinate, ``h_j = relative_step * (1 + |x_j|)``,
balancing truncation against roundoff at 64-bit precision.
"""

from __future__ import annotations

import numpy as np

__all__ = ["central_gradient", "central_jacobian"]

DEFAULT_RELATIVE_STEP = 1e-6


def central_gradient(f, x, relative_step: float = DEFAULT_RELATIVE_STEP) -> np.ndarray:
    """Gradient of a scalar function by central differences."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for j in range(x.size):
        h = relative_step * (1.0 + abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        grad[j] = (f(xp) - f(xm)) / (2.0 * h)
    return grad


def central_jacobian(f, x, relative_step: float = DEFAULT_RELATIVE_STEP) -> np.ndarray:
    """Jacobian of a vector function by central differences, one column per input."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = relative_step * (1.0 + abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * h))
    return np.column_stack(cols)
