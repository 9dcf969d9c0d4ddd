import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lhsd.copula import (
    BivariateLogisticCopula,
    BoundaryError,
    GaussianCopula,
    IndependentCopula,
    clamp_events,
    clamp_interior,
    conditional_input_cdf,
    conditional_input_quantile,
    copula_from_dict,
    correlation_from_pairs,
)
from lhsd.dist import Logistic, MvnSpec, Normal, mvn_conditional

BIVARIATE = {
    "independent": IndependentCopula(2),
    "logistic": BivariateLogisticCopula(),
    "gaussian_0.5": GaussianCopula([[1, 0.5], [0.5, 1]]),
    "gaussian_-0.8": GaussianCopula([[1, -0.8], [-0.8, 1]]),
    "gaussian_0.95": GaussianCopula([[1, 0.95], [0.95, 1]]),
}
GRID = np.linspace(0.025, 0.975, 20)


def flood_copula():
    return GaussianCopula(correlation_from_pairs(8, [
        {"i": 0, "j": 1, "rho": 0.5}, {"i": 2, "j": 3, "rho": 0.3}, {"i": 6, "j": 7, "rho": 0.3}]))


def test_independent_conditional_is_identity():
    c = IndependentCopula(3)
    assert c.conditional_cdf(2, 0.37, [0.1, 0.9]) == 0.37
    assert c.conditional_quantile(2, 0.37, [0.1, 0.9]) == 0.37


def test_logistic_conditional_value():
    assert BivariateLogisticCopula().conditional_cdf(1, 0.5, [0.5]) == pytest.approx(4 / 9, abs=1e-15)


def test_logistic_conditional_quantile_value():
    assert BivariateLogisticCopula().conditional_quantile(1, 0.25, [0.5]) == pytest.approx(1 / 3, abs=1e-15)


def test_gaussian_median_symmetry():
    assert BIVARIATE["gaussian_0.5"].conditional_cdf(1, 0.5, [0.5]) == pytest.approx(0.5, abs=1e-15)


def test_logistic_copula_cdf_closed_form():
    u, v = 0.3, 0.8
    assert BivariateLogisticCopula().cdf([u, v]) == pytest.approx(u * v / (u + v - u * v), abs=1e-15)


@pytest.mark.parametrize("name", sorted(BIVARIATE))
def test_copula_cdf_boundaries(name):
    c = BIVARIATE[name]
    assert c.cdf([1.0, 1.0]) == pytest.approx(1.0, abs=1e-14)
    assert c.cdf([0.0, 0.7]) == pytest.approx(0.0, abs=1e-14)
    assert c.cdf([0.7, 0.0]) == pytest.approx(0.0, abs=1e-14)
    # uniform margins
    assert c.cdf([0.3, 1.0]) == pytest.approx(0.3, abs=1e-12)
    assert c.cdf([1.0, 0.6]) == pytest.approx(0.6, abs=1e-12)


@pytest.mark.parametrize("name", sorted(BIVARIATE))
def test_conditional_matches_finite_difference(name):
    c = BIVARIATE[name]
    h = 1e-5
    u1, u2 = np.meshgrid(GRID, GRID, indexing="ij")
    up = c.cdf(np.stack([u1 + h, u2], axis=-1))
    dn = c.cdf(np.stack([u1 - h, u2], axis=-1))
    fd = (up - dn) / (2 * h)
    exact = c.conditional_cdf(1, u2, u1[..., None])
    assert np.max(np.abs(fd - exact)) <= 1e-6


@pytest.mark.parametrize("name", sorted(BIVARIATE))
def test_conditional_is_monotone_cdf(name):
    c = BIVARIATE[name]
    u = np.linspace(0, 1, 401)
    for u1 in GRID:
        vals = c.conditional_cdf(1, u, np.full((u.size, 1), u1))
        assert np.all(np.diff(vals) >= 0)
        assert vals[0] == pytest.approx(0, abs=1e-12) and vals[-1] == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("name", sorted(BIVARIATE))
def test_quantile_roundtrip(name):
    c = BIVARIATE[name]
    gen = np.random.default_rng(1)
    z = gen.uniform(1e-6, 1 - 1e-6, 2000)
    cond = gen.uniform(1e-6, 1 - 1e-6, (2000, 1))
    u = c.conditional_quantile(1, z, cond)
    assert np.max(np.abs(c.conditional_cdf(1, u, cond) - z)) <= 1e-9
    # the reverse direction is only well posed where the cdf value is not
    # rounded onto 0 or 1
    w = c.conditional_cdf(1, z, cond)
    ok = (w > 1e-8) & (w < 1 - 1e-8)
    assert ok.mean() > 0.5
    back = c.conditional_quantile(1, w[ok], cond[ok])
    assert np.max(np.abs(back - z[ok])) <= 1e-9


def test_flood_gaussian_roundtrip_k8():
    c = flood_copula()
    gen = np.random.default_rng(2)
    for k in range(1, 8):
        z = gen.uniform(1e-6, 1 - 1e-6, 500)
        cond = gen.uniform(1e-6, 1 - 1e-6, (500, k))
        u = c.conditional_quantile(k, z, cond)
        assert np.max(np.abs(c.conditional_cdf(k, u, cond) - z)) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(z=st.floats(1e-9, 1 - 1e-9), u1=st.floats(1e-9, 1 - 1e-9))
def test_logistic_inverse_closed_form(z, u1):
    c = BivariateLogisticCopula()
    r = math.sqrt(z)
    assert c.conditional_quantile(1, z, [u1]) == pytest.approx(u1 * r / (1 - r + u1 * r), rel=1e-12, abs=1e-15)
    assert abs(c.conditional_cdf(1, c.conditional_quantile(1, z, [u1]), [u1]) - z) <= 1e-9


def test_bisection_default_inverse_agrees_with_closed_form():
    from lhsd.copula import bisect_conditional_quantile

    c = BivariateLogisticCopula()
    z = np.linspace(0.01, 0.99, 50)
    cond = np.full((50, 1), 0.3)
    np.testing.assert_allclose(bisect_conditional_quantile(c, 1, z, cond), c.conditional_quantile(1, z, cond),
                               atol=1e-12)


def test_identity_gaussian_equals_independent():
    g, ind = GaussianCopula(np.eye(3)), IndependentCopula(3)
    gen = np.random.default_rng(4)
    u = gen.uniform(0.01, 0.99, (100, 3))
    np.testing.assert_allclose(g.cdf(u), ind.cdf(u), atol=1e-7)  # K>2 cdf is numeric
    for k in (1, 2):
        np.testing.assert_allclose(g.conditional_cdf(k, u[:, k], u[:, :k]), u[:, k], rtol=0, atol=1e-15)
        np.testing.assert_allclose(g.conditional_quantile(k, u[:, k], u[:, :k]), u[:, k], rtol=0, atol=1e-15)
    np.testing.assert_allclose(g.logpdf(u), ind.logpdf(u), atol=1e-15)
    g2 = GaussianCopula(np.eye(2))
    np.testing.assert_allclose(g2.cdf(u[:, :2]), u[:, 0] * u[:, 1], rtol=0, atol=1e-15)


def test_gaussian_copula_normal_marginals_is_mvn_chain():
    gen = np.random.default_rng(5)
    p = gen.standard_normal((4, 4))
    spec = MvnSpec(gen.standard_normal(4), p.T @ p + 0.1 * np.eye(4))
    sd = np.sqrt(np.diag(spec.sigma))
    cop = GaussianCopula(spec.sigma / np.outer(sd, sd))
    margs = [Normal(m, s) for m, s in zip(spec.mu, sd)]
    x = spec.mu + gen.standard_normal((1000, 4)) @ np.linalg.cholesky(spec.sigma).T
    for k in range(1, 4):
        c = mvn_conditional(spec, k, x[:, :k])
        expected = Normal(0, 1).cdf((x[:, k] - c.mu_star) / math.sqrt(c.sigma_star_sq))
        got = conditional_input_cdf(margs, cop, k, x[:, k], x[:, :k])
        assert np.max(np.abs(got - expected)) <= 1e-8
        z = gen.uniform(0.01, 0.99, 1000)
        xq = conditional_input_quantile(margs, cop, k, z, x[:, :k])
        expected_q = c.mu_star + math.sqrt(c.sigma_star_sq) * Normal(0, 1).quantile(z)
        assert np.max(np.abs(xq - expected_q)) <= 1e-8 * max(1.0, np.abs(expected_q).max())


def test_conditional_input_examples():
    m = [Logistic(0, 1), Logistic(0, 1)]
    assert conditional_input_cdf(m, BivariateLogisticCopula(), 1, 0.0, [0.0]) == pytest.approx(4 / 9, abs=1e-15)
    ind = IndependentCopula(2)
    for prefix in (-3.0, 0.0, 5.0):
        assert conditional_input_cdf(m, ind, 1, 1.2, [prefix]) == pytest.approx(m[1].cdf(1.2), abs=1e-15)


def test_boundary_conditioning_values_rejected():
    c = BivariateLogisticCopula()
    for bad in (0.0, 1.0):
        with pytest.raises(BoundaryError):
            c.conditional_cdf(1, 0.5, [bad])
        with pytest.raises(BoundaryError):
            c.conditional_quantile(1, 0.5, [bad])
    with pytest.raises(BoundaryError):
        conditional_input_cdf([Normal(0, 1)] * 2, GaussianCopula([[1, .2], [.2, 1]]), 1, 0.0, [-math.inf])


def test_component_index_and_argument_errors():
    c = flood_copula()
    with pytest.raises(IndexError):
        c.conditional_cdf(0, 0.5, [])
    with pytest.raises(IndexError):
        c.conditional_cdf(8, 0.5, [0.5] * 8)
    with pytest.raises(ValueError):
        c.conditional_cdf(3, 0.5, [0.5, 0.5])
    with pytest.raises(ValueError):
        c.conditional_quantile(1, 1.0, [0.5])


def test_clamp_counter():
    before = clamp_events["test"]
    out = clamp_interior(np.array([0.0, 0.5, 1.0]), "test")
    assert clamp_events["test"] - before == 2
    assert 0.0 < out[0] < 1e-11 and 1.0 - 1e-11 < out[2] < 1.0


def test_gaussian_validation():
    with pytest.raises(ValueError):
        GaussianCopula([[1, 0.5], [0.5, 2]])
    with pytest.raises(ValueError, match="positive definite"):
        GaussianCopula([[1, 0.9, 0.9], [0.9, 1, -0.9], [0.9, -0.9, 1]])


def test_marginal_copula_and_reorder():
    c = flood_copula()
    u = np.array([0.3, 0.6])
    assert c.marginal_cdf(u) == pytest.approx(GaussianCopula([[1, 0.5], [0.5, 1]]).cdf(u), abs=1e-12)
    r = c.reordered([1, 0, 2, 3, 4, 5, 6, 7])
    assert r.corr[0, 1] == 0.5 and r.corr[2, 3] == 0.3


def test_config_roundtrip():
    full = copula_from_dict({"family": "gaussian", "correlation": [[1, 0.4], [0.4, 1]]})
    sparse = copula_from_dict({"family": "gaussian", "pairs": [{"i": 0, "j": 1, "rho": 0.4}]}, dim=2)
    np.testing.assert_array_equal(full.corr, sparse.corr)
    for c in (full, BivariateLogisticCopula(), IndependentCopula(3)):
        again = copula_from_dict(c.to_dict())
        assert type(again) is type(c) and again.dim == c.dim
    with pytest.raises(ValueError):
        copula_from_dict({"family": "clayton"})


def test_copula_logpdf_integrates_against_cdf():
    # mixed partial of C equals the density
    h = 1e-4
    for name in ("logistic", "gaussian_0.5"):
        c = BIVARIATE[name]
        for u1, u2 in ((0.3, 0.4), (0.7, 0.2), (0.5, 0.9)):
            mixed = (c.cdf([u1 + h, u2 + h]) - c.cdf([u1 + h, u2 - h])
                     - c.cdf([u1 - h, u2 + h]) + c.cdf([u1 - h, u2 - h])) / (4 * h * h)
            assert math.exp(c.logpdf([u1, u2])) == pytest.approx(mixed, rel=1e-5)


def test_sklar_logistic_joint_cdf():
    n = 100_000
    gen = np.random.default_rng(6)
    c = BivariateLogisticCopula()
    u1 = gen.random(n)
    u2 = c.conditional_quantile(1, gen.uniform(1e-12, 1 - 1e-12, n), u1[:, None])
    m = Logistic(0, 1)
    x1, x2 = m.quantile(u1), m.quantile(u2)
    for a in (-1.0, 0.0, 1.5):
        for b in (-1.0, 0.0, 1.5):
            p = 1.0 / (1.0 + math.exp(-a) + math.exp(-b))
            emp = np.mean((x1 <= a) & (x2 <= b))
            assert abs(emp - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_gaussian_copula_sample_correlation():
    # normal scores from the chain reproduce the correlation matrix
    c = flood_copula()
    gen = np.random.default_rng(7)
    n = 20_000
    u = np.empty((n, 8))
    u[:, 0] = gen.random(n)
    for k in range(1, 8):
        u[:, k] = c.conditional_quantile(k, gen.uniform(1e-12, 1 - 1e-12, n), u[:, :k])
    r = np.corrcoef(stats.norm.ppf(u), rowvar=False)
    assert np.max(np.abs(r - c.corr)) <= 5 / math.sqrt(n)
