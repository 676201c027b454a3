import numpy as np
import pytest

from srcek.dataset import Dataset
from srcek.exceptions import DataValidationError
from srcek.wpls import wpls_implicit, wpls_vanilla

from helpers import make_instance, rel_err


def test_single_channel_exact_affine_law():
    rng = np.random.default_rng(0)
    x = rng.normal(size=6)
    data = Dataset(X=x[:, None], y=2.0 * x + 3.0)
    model, _ = wpls_vanilla(data, 1)
    assert model.factors_used == 1
    assert model.beta == pytest.approx([2.0], abs=1e-12)
    assert model.beta0 == pytest.approx(3.0, abs=1e-12)
    assert np.abs(data.y - model.predict(data.X)).max() < 1e-12


def test_constant_response_keeps_intercept_only():
    rng = np.random.default_rng(1)
    data = Dataset(X=rng.normal(size=(5, 3)), y=np.full(5, 4.2))
    model, fact = wpls_vanilla(data, 1)
    assert model.factors_used == 0
    assert np.all(model.beta == 0.0)
    assert model.beta0 == pytest.approx(4.2, abs=1e-12)
    assert fact.W.shape == (3, 0)
    assert fact.q.shape == (1,)


def test_full_factor_count_matches_least_squares():
    # with as many factors as channels the fit spans the same space as
    # ordinary least squares on centered data
    rng = np.random.default_rng(42)
    X = rng.normal(size=(8, 5))
    y = rng.normal(size=8)
    model, _ = wpls_vanilla(Dataset(X=X, y=y), 5)
    Xc = X - X.mean(axis=0)
    beta_ols = np.linalg.lstsq(Xc, y - y.mean(), rcond=None)[0]
    assert rel_err(model.beta, beta_ols) < 1e-8


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("n_factors", [1, 3, 5])
def test_implicit_agrees_with_deflation(seed, n_factors):
    rng = np.random.default_rng(seed)
    data = make_instance(rng, m=10, n=6)
    mv, _ = wpls_vanilla(data, n_factors)
    mi, _ = wpls_implicit(data, n_factors)
    assert mv.factors_used == mi.factors_used
    assert rel_err(mi.beta, mv.beta) < 1e-10
    assert abs(mi.beta0 - mv.beta0) / (1.0 + abs(mv.beta0)) < 1e-10


def test_scores_orthogonal_in_weighted_inner_product():
    rng = np.random.default_rng(7)
    data = make_instance(rng, m=10, n=6)
    _, fact = wpls_implicit(data, 3)
    T = fact.T
    G = np.diag(data.gamma)
    M = T.T @ G @ T
    norms = np.sqrt(np.diag(M))
    off = M - np.diag(np.diag(M))
    assert np.abs(off / np.outer(norms, norms)).max() < 1e-9


def test_requesting_m_factors_caps_at_rank():
    rng = np.random.default_rng(3)
    data = make_instance(rng, m=8, n=5)
    for fitter in (wpls_vanilla, wpls_implicit):
        model, _ = fitter(data, 8)
        assert model.factors_used <= 7
        # centered 8x5 full-column-rank data supports exactly 5 factors
        assert model.factors_used == 5


def test_exact_low_rank_data_terminates_at_rank():
    rng = np.random.default_rng(5)
    basis = rng.normal(size=(2, 6))
    coords = rng.normal(size=(9, 2))
    X = coords @ basis
    y = coords @ rng.normal(size=2) + 1.5
    model, _ = wpls_vanilla(Dataset(X=X, y=y), 5)
    assert model.factors_used <= 2
    assert np.abs(y - model.predict(X)).max() < 1e-8


@pytest.mark.parametrize("scale", [0.1, 7.0, -3.0])
def test_effective_model_is_scale_invariant(scale):
    rng = np.random.default_rng(11)
    data = make_instance(rng, m=12, n=7)
    lam = rng.uniform(0.5, 1.5, size=7)

    def effective(s):
        weighted = Dataset(X=data.X * (s * lam), y=data.y, gamma=data.gamma)
        model, _ = wpls_vanilla(weighted, 3)
        return s * lam * model.beta, model.beta0

    base_beta, base_beta0 = effective(1.0)
    beta, beta0 = effective(scale)
    assert rel_err(beta, base_beta) < 1e-8
    assert abs(beta0 - base_beta0) / (1.0 + abs(base_beta0)) < 1e-8


def test_full_rank_fit_ignores_channel_weighting():
    # at full factor count the effective model coincides with least squares,
    # which does not react to rescaling individual channels
    rng = np.random.default_rng(13)
    data = make_instance(rng, m=10, n=4)
    lam = rng.uniform(0.3, 3.0, size=4)
    base, _ = wpls_vanilla(data, 4)
    weighted, _ = wpls_vanilla(
        Dataset(X=data.X * lam, y=data.y, gamma=data.gamma), 4)
    assert rel_err(lam * weighted.beta, base.beta) < 1e-8


def test_partial_rank_fit_depends_on_channel_weighting():
    rng = np.random.default_rng(17)
    data = make_instance(rng, m=10, n=6, noise=1.0)
    lam = rng.uniform(0.3, 3.0, size=6)
    base, _ = wpls_vanilla(data, 2)
    weighted, _ = wpls_vanilla(
        Dataset(X=data.X * lam, y=data.y, gamma=data.gamma), 2)
    assert rel_err(lam * weighted.beta, base.beta) > 1e-6


@pytest.mark.parametrize("bad_l", [0, -1, 9])
def test_factor_count_out_of_range(bad_l):
    rng = np.random.default_rng(0)
    data = make_instance(rng, m=8, n=4)
    with pytest.raises(DataValidationError):
        wpls_vanilla(data, bad_l)
    with pytest.raises(DataValidationError):
        wpls_implicit(data, bad_l)


def test_mismatched_shapes_rejected():
    with pytest.raises(DataValidationError):
        Dataset(X=np.zeros((4, 3)), y=np.zeros(5))
    with pytest.raises(DataValidationError):
        Dataset(X=np.zeros((4, 3)), y=np.zeros(4), gamma=np.zeros(4))
    with pytest.raises(DataValidationError):
        Dataset(X=np.array([[1.0, np.nan], [0.0, 1.0]]), y=np.zeros(2))


def test_single_object_fit_rejected():
    with pytest.raises(DataValidationError):
        wpls_vanilla(Dataset(X=np.ones((1, 2)), y=np.ones(1)), 1)
