"""Fold-batched cross-validation evaluation.

Monte-Carlo plans give every fold the same calibration and test sizes, so
the per-fold WPLS recurrences can run as stacks of batched matrix products
instead of a Python loop over folds.  Both paths also exploit that folds
are row subsets of one matrix: the weighted Gram products each fold needs
are gathered from a single precomputed global product.

The arithmetic mirrors the single-fold routines.  Whenever any fold would
hit rank termination the batched path bails out (returns ``None``) and the
caller falls back to the per-fold implementation, which handles truncation.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from .wpls import GRAM_COLLAPSE, RANK_EPSILON

__all__ = ["stackable_folds", "batched_fold_mse", "batched_fold_mse_and_gradient"]


def stackable_folds(plan) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Stack fold indices into (J, mc) and (J, mt) arrays when sizes agree."""
    cal_sizes = {cal.size for cal, _ in plan.folds}
    test_sizes = {test.size for _, test in plan.folds}
    if len(cal_sizes) != 1 or len(test_sizes) != 1:
        return None
    cal_idx = np.stack([cal for cal, _ in plan.folds])
    test_idx = np.stack([test for _, test in plan.folds])
    return cal_idx, test_idx


def _terminates(r, t, t_norms, y_norms, gamma_max, score_scale, k: int,
                t_max) -> bool:
    angle = np.abs(r) <= RANK_EPSILON * y_norms * t_norms * gamma_max
    if k == 0:
        return bool(angle.any())
    collapse = (t_norms <= RANK_EPSILON * score_scale) \
        | (t <= GRAM_COLLAPSE * t_max)
    return bool(angle.any() or collapse.any())


def _rows(v):
    # (J, m) -> (J, 1, m) so that (J, 1, m) @ (J, m, n) contracts via BLAS
    return v[:, None, :]


def batched_fold_mse(X, y, gamma, cal_idx, test_idx, n_factors: int, lam):
    """Per-fold weighted MSE for all folds at once; None on rank termination.

    Runs the preimage (object-space) recurrences, so per fold only the
    gathered mc-by-mc weighted Gram block is touched; predictions on the
    test group come from the gathered test/calibration cross block.
    """
    Xw = X * lam[None, :]
    K = Xw @ Xw.T
    row_sq = np.einsum("ij,ij->i", Xw, Xw)

    Kc = K[cal_idx[:, :, None], cal_idx[:, None, :]]
    Kt = K[test_idx[:, :, None], cal_idx[:, None, :]]
    yc, gc = y[cal_idx], gamma[cal_idx]
    yt, gt = y[test_idx], gamma[test_idx]

    t0 = gc.sum(axis=1)
    gy = gc * yc
    y_norms = np.linalg.norm(yc, axis=1)
    gamma_max = gc.max(axis=1)
    score_scale = row_sq[cal_idx].sum(axis=1) * y_norms * gamma_max

    J, mc = yc.shape
    T = np.ones((J, mc))
    V = yc
    qs, ws, Vs = [], [], []
    t_max = np.zeros(J)
    for k in range(n_factors + 1):
        r = np.sum(gy * T, axis=1)
        gT = gc * T
        t = np.sum(T * gT, axis=1)
        t_norms = np.linalg.norm(T, axis=1)
        if _terminates(r, t, t_norms, y_norms, gamma_max, score_scale, k, t_max):
            return None
        if k >= 1:
            t_max = np.maximum(t_max, t)
        qs.append(r / t)
        if k < n_factors:
            V = V - qs[k][:, None] * T
            Vs.append(V)
            Q = (Kc @ (gc * V)[:, :, None])[:, :, 0]
            U = Q - (np.sum(gc * Q, axis=1) / t0)[:, None]
            w = np.sum(T * (gc * U), axis=1) / t
            ws.append(w)
            T = U - w[:, None] * T

    v = qs[n_factors]
    alpha = v[:, None] * Vs[n_factors - 1]
    for j in range(n_factors - 1, 0, -1):
        v = qs[j] - ws[j] * v
        alpha += v[:, None] * Vs[j - 1]

    galpha = gc * alpha
    fit = (Kc @ galpha[:, :, None])[:, :, 0]
    beta0 = np.sum(gc * (yc - fit), axis=1) / t0
    if not np.all(np.isfinite(beta0)):
        return None
    e = yt - (Kt @ galpha[:, :, None])[:, :, 0] - beta0[:, None]
    if not np.all(np.isfinite(e)):
        return None
    return np.einsum("jt,jt->j", gt, e * e) / gt.sum(axis=1)


# Folds per derivative chunk: large enough for batched BLAS, small enough
# that the (chunk, mc, n) work tensors stay cache resident.
GRADIENT_CHUNK = 16


def batched_fold_mse_and_gradient(X, y, gamma, cal_idx, test_idx,
                                  n_factors: int, lam):
    """Per-fold MSE plus the summed residual-Jacobian products.

    Returns ``(fold_mse, accum)`` with
    ``accum = sum_j (de_j)' (gamma_j * e_j) / sum(gamma_j)``, or ``None`` on
    rank termination in any fold.  Folds are processed in fixed-size chunks;
    chunk results reduce in fold order, so output is independent of sizes
    only up to float rounding and deterministic for a given build.
    """
    Xw = X * lam[None, :]
    K = Xw @ Xw.T
    row_sq = np.einsum("ij,ij->i", Xw, Xw)
    fold_chunks = []
    accum = np.zeros(X.shape[1])
    for start in range(0, cal_idx.shape[0], GRADIENT_CHUNK):
        chunk = _gradient_chunk(
            X, y, gamma, Xw, K, row_sq,
            cal_idx[start:start + GRADIENT_CHUNK],
            test_idx[start:start + GRADIENT_CHUNK], n_factors, lam)
        if chunk is None:
            return None
        fold_chunks.append(chunk[0])
        accum += chunk[1]
    return np.concatenate(fold_chunks), accum


def _gradient_chunk(X, y, gamma, Xw, K, row_sq, cal_idx, test_idx,
                    n_factors: int, lam):
    Xc = X[cal_idx]
    Xlam = Xw[cal_idx]
    XLXG = K[cal_idx[:, :, None], cal_idx[:, None, :]] * gamma[cal_idx][:, None, :]
    yc, gc = y[cal_idx], gamma[cal_idx]
    J, mc, n = Xc.shape

    t0 = gc.sum(axis=1)
    gy = gc * yc
    y_norms = np.linalg.norm(yc, axis=1)
    gamma_max = gc.max(axis=1)
    score_scale = row_sq[cal_idx].sum(axis=1) * y_norms * gamma_max

    T = np.ones((J, mc))
    dT = np.zeros((J, mc, n))
    V = yc.copy()
    dV = np.zeros((J, mc, n))
    scratch = np.empty((J, mc, n))
    mat_buf = np.empty((J, mc, n))

    qs, dqs, ws, dws, Vs, dVs = [], [], [], [], [], []
    for k in range(n_factors + 1):
        r = np.sum(gy * T, axis=1)
        t_norms = np.linalg.norm(T, axis=1)
        if _terminates(r, t_norms, y_norms, gamma_max, score_scale, k):
            return None
        dr = (_rows(gy) @ dT)[:, 0, :]
        gT = gc * T
        t = np.sum(T * gT, axis=1)
        dt = 2.0 * (_rows(gT) @ dT)[:, 0, :]
        q = r / t
        dq = (dr - q[:, None] * dt) / t[:, None]
        if k > 0:
            qs.append(q)
            dqs.append(dq)
        if k < n_factors:
            # dV <- dV - q dT - T dq'
            np.multiply(dT, q[:, None, None], out=scratch)
            dV -= scratch
            np.multiply(T[:, :, None], dq[:, None, :], out=scratch)
            dV -= scratch
            V = V - q[:, None] * T
            Vs.append(V)
            dVs.append(dV.copy())
            # dQ <- XLXG dV + 2 Xlam diag(Xc' (gc V))
            dQ = np.matmul(XLXG, dV, out=mat_buf)
            u = (_rows(gc * V) @ Xc)[:, 0, :]
            np.multiply(Xlam, (2.0 * u)[:, None, :], out=scratch)
            dQ += scratch
            Q = (XLXG @ V[:, :, None])[:, :, 0]
            # centering: U = Q - 1 (gc'Q)/t0, same rows subtracted from dQ
            dQ -= ((_rows(gc) @ dQ)[:, 0, :] / t0[:, None])[:, None, :]
            dU = dQ
            U = Q - (np.sum(gc * Q, axis=1) / t0)[:, None]
            gU = gc * U
            w = np.sum(T * gU, axis=1) / t
            dw = ((_rows(gU) @ dT)[:, 0, :] + (_rows(gT) @ dU)[:, 0, :]
                  - w[:, None] * dt) / t[:, None]
            # dT <- dU - w dT - T dw'
            np.multiply(dT, w[:, None, None], out=scratch)
            np.subtract(dU, scratch, out=dT)
            np.multiply(T[:, :, None], dw[:, None, :], out=scratch)
            dT -= scratch
            T = U - w[:, None] * T
            ws.append(w)
            dws.append(dw)

    l = n_factors
    v = qs[l - 1]
    dv = dqs[l - 1]
    alpha = v[:, None] * Vs[l - 1]
    dalpha = np.multiply(dVs[l - 1], v[:, None, None])
    np.multiply(Vs[l - 1][:, :, None], dv[:, None, :], out=scratch)
    dalpha += scratch
    for j in range(l - 1, 0, -1):
        dv = dqs[j - 1] - ws[j][:, None] * dv - v[:, None] * dws[j]
        v = qs[j - 1] - ws[j] * v
        alpha += v[:, None] * Vs[j - 1]
        np.multiply(dVs[j - 1], v[:, None, None], out=scratch)
        dalpha += scratch
        np.multiply(Vs[j - 1][:, :, None], dv[:, None, :], out=scratch)
        dalpha += scratch

    g_alpha = (_rows(gc * alpha) @ Xc)[:, 0, :]
    beta0 = np.sum(gc * (yc - (XLXG @ alpha[:, :, None])[:, :, 0]), axis=1) / t0
    S = np.matmul(XLXG, dalpha, out=mat_buf)
    np.multiply(Xlam, (2.0 * g_alpha)[:, None, :], out=scratch)
    S += scratch
    grad_beta0 = -(_rows(gc) @ S)[:, 0, :] / t0[:, None]

    Xt = X[test_idx]
    yt = y[test_idx]
    gt = gamma[test_idx]
    Kt = K[test_idx[:, :, None], cal_idx[:, None, :]]
    e = yt - (Kt @ (gc * alpha)[:, :, None])[:, :, 0] - beta0[:, None]
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(grad_beta0))):
        return None
    test_weight = gt.sum(axis=1)
    ge = (gt * e) / test_weight[:, None]

    # accum = sum_j de_j' (gt e_j)/sum(gt) without materializing de_j:
    #   de = -2 Xt diag(lam g_alpha) - Kt Gc dalpha - 1 grad_beta0'
    accum = -2.0 * lam * np.einsum("jn,jtn,jt->n", g_alpha, Xt, ge,
                                   optimize=True)
    z = (_rows(np.einsum("jtm,jt->jm", Kt, ge) * gc) @ dalpha)[:, 0, :]
    accum -= z.sum(axis=0)
    accum -= (ge.sum(axis=1)[:, None] * grad_beta0).sum(axis=0)
    fold_mse = np.einsum("jt,jt->j", gt, e * e) / test_weight
    return fold_mse, accum
