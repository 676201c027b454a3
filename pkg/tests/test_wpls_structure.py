"""Structural identities of the WPLS factorization.

Every identity is checked after scaling by the norms of the participating
vectors, on a battery of seeded random instances with non-uniform response
weights.
"""

import numpy as np
import pytest

from srcek.wpls import wpls_implicit, wpls_vanilla

from helpers import deflation_sequence, make_instance

TOL = 1e-8


def _norm(v):
    return np.linalg.norm(v) + 1e-300


@pytest.fixture(params=range(8), ids=lambda s: f"seed{s}")
def fitted(request):
    rng = np.random.default_rng(100 + request.param)
    m = int(rng.integers(6, 16))
    n = int(rng.integers(3, 12))
    l = int(rng.integers(1, min(m - 1, n) + 1))
    data = make_instance(rng, m, n)
    model, fact = wpls_vanilla(data, l)
    return data, model, fact


def test_loading_weight_pairing_is_unit(fitted):
    _, model, fact = fitted
    for k in range(1, model.factors_used + 1):
        pw = fact.P[:, k] @ fact.W[:, k - 1]
        assert abs(pw - 1.0) < TOL * _norm(fact.P[:, k]) * _norm(fact.W[:, k - 1])


def test_deflated_matrices_annihilate_weights(fitted):
    data, model, fact = fitted
    Xs = deflation_sequence(data, fact)
    for k in range(1, model.factors_used + 1):
        w = fact.W[:, k - 1]
        for j in range(k + 1, model.factors_used + 2):
            if j >= len(Xs):
                break
            prod = Xs[j] @ w
            assert np.abs(prod).max() < TOL * np.abs(Xs[j]).max() * _norm(w) * len(w)


def test_weight_vectors_mutually_orthogonal(fitted):
    _, model, fact = fitted
    l = model.factors_used
    for k in range(1, l + 1):
        for j in range(k + 1, l + 1):
            w_k, w_j = fact.W[:, k - 1], fact.W[:, j - 1]
            assert abs(w_j @ w_k) < TOL * _norm(w_j) * _norm(w_k)
            p_j = fact.P[:, j]
            assert abs(p_j @ w_k) < TOL * _norm(p_j) * _norm(w_k)


def test_deflated_matrices_orthogonal_to_scores(fitted):
    data, model, fact = fitted
    Xs = deflation_sequence(data, fact)
    G = data.gamma
    for k in range(model.factors_used + 1):
        t_k = fact.T[:, k]
        for j in range(k + 1, model.factors_used + 1):
            prod = Xs[j].T @ (G * t_k)
            assert np.abs(prod).max() < TOL * np.abs(Xs[j]).max() * _norm(t_k) * G.max() * len(t_k)


def test_scores_weighted_orthogonal(fitted):
    data, model, fact = fitted
    G = data.gamma
    for k in range(model.factors_used + 1):
        for j in range(k + 1, model.factors_used + 1):
            t_k, t_j = fact.T[:, k], fact.T[:, j]
            ip = t_j @ (G * t_k)
            assert abs(ip) < TOL * _norm(t_j) * _norm(t_k) * G.max()


def test_weight_recurrence_through_loadings(fitted):
    data, model, fact = fitted
    for k in range(1, model.factors_used):
        expected = fact.W[:, k - 1] - fact.P[:, k] * fact.r_scalars[k]
        got = fact.W[:, k]
        assert np.abs(got - expected).max() < TOL * _norm(expected)


def test_distant_loadings_orthogonal(fitted):
    _, model, fact = fitted
    l = model.factors_used
    for k in range(1, l + 1):
        for j in range(k + 2, l + 1):
            w_j, p_j, p_k = fact.W[:, j - 1], fact.P[:, j], fact.P[:, k]
            assert abs(w_j @ p_k) < TOL * _norm(w_j) * _norm(p_k)
            assert abs(p_j @ p_k) < TOL * _norm(p_j) * _norm(p_k)


def test_loading_weight_product_is_unit_upper_bidiagonal(fitted):
    _, model, fact = fitted
    l = model.factors_used
    if l == 0:
        return
    M = fact.P[:, 1:].T @ fact.W
    scale = np.abs(M).max() + 1e-300
    for i in range(l):
        for j in range(l):
            if i == j:
                assert abs(M[i, j] - 1.0) < TOL * max(scale, 1.0)
            elif j == i + 1:
                assert abs(M[i, j] - fact.w_scalars[j]) < TOL * max(scale, 1.0)
            else:
                assert abs(M[i, j]) < TOL * scale


def test_loadings_reconstruct_from_unweighted_matrix(fitted):
    data, model, fact = fitted
    for k in range(model.factors_used + 1):
        rebuilt = data.X.T @ (data.gamma * fact.T[:, k]) / fact.t_scalars[k]
        assert np.abs(rebuilt - fact.P[:, k]).max() < 1e-9 * (1 + _norm(fact.P[:, k]))


def test_coupling_scalars_match_loading_weight_products(fitted):
    _, model, fact = fitted
    if model.factors_used == 0:
        return
    assert fact.w_scalars[0] == pytest.approx(0.0, abs=1e-9)
    for k in range(1, model.factors_used):
        pw = fact.P[:, k] @ fact.W[:, k]
        assert abs(fact.w_scalars[k] - pw) < TOL * (1 + abs(pw))


def test_score_recurrence_through_preimages(fitted):
    data, model, fact = fitted
    X, G = data.X, data.gamma
    XXG = (X @ X.T) * G[None, :]
    t0 = G.sum()
    for k in range(model.factors_used):
        v_next = fact.V[:, k]
        Q = XXG @ v_next
        U = Q - np.ones(len(Q)) * (G @ Q) / t0
        expected = U - fact.w_scalars[k] * fact.T[:, k]
        got = fact.T[:, k + 1]
        assert np.abs(got - expected).max() < TOL * (_norm(expected) + 1.0)


def test_preimage_recurrence(fitted):
    data, model, fact = fitted
    prev = data.y
    for k in range(model.factors_used):
        expected = prev - fact.q[k] * fact.T[:, k]
        assert np.abs(fact.V[:, k] - expected).max() < TOL * (_norm(expected) + 1.0)
        prev = fact.V[:, k]


def test_implicit_factorization_matches_deflation(fitted):
    data, model, fact = fitted
    model_i, fact_i = wpls_implicit(data, max(model.factors_used, 1))
    assert model_i.factors_used == model.factors_used
    for name in ("T", "q", "w_scalars", "t_scalars", "r_scalars", "V", "P", "W"):
        a, b = getattr(fact_i, name), getattr(fact, name)
        assert a.shape == b.shape
        assert np.abs(a - b).max() < 1e-8 * (1.0 + np.abs(b).max())
