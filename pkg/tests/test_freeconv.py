import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hcizflow.freeconv import (bridge_marginal, catalan, check_bridge_bounds, free_coupling_moments,
                               free_cumulants, moments_from_free_cumulants, quantile_coupling,
                               semicircle_convolve)
from hcizflow.measures import Grid, from_function, l1_distance, moment, semicircle, wasserstein1

from conftest import bump_density


def catalan_by_recursion(n):
    """C_0 = 1, C_{p+1} = sum_k C_k C_{p-k}."""
    c = [1]
    for p in range(n):
        c.append(sum(c[k] * c[p - k] for k in range(p + 1)))
    return c


@pytest.fixture(scope="module")
def inputs():
    g = Grid.uniform(-1.5, 1.5, 601)
    return {
        "skewed_bump": from_function(lambda x: bump_density(x, 0.0, 1.0, 0.5), g),
        "two_bumps": from_function(lambda x: bump_density(x, -0.8, 0.5) + 0.6 * bump_density(x, 0.7, 0.6), g),
        "semicircle": semicircle(0.3),
    }


def test_catalan_numbers_match_recursion():
    assert [catalan(k) for k in range(12)] == catalan_by_recursion(11)


def test_semicircles_add_variances():
    out = semicircle_convolve(semicircle(1.0), 0.5)
    assert moment(out, 2) == pytest.approx(1.5, abs=1e-3)
    assert moment(out, 4) == pytest.approx(2 * 1.5 ** 2, abs=1e-3)
    assert l1_distance(out, semicircle(1.5, n=1601)) < 1e-4


@pytest.mark.parametrize("name", ["skewed_bump", "two_bumps", "semicircle"])
def test_semigroup_in_covariance(inputs, name):
    nu = inputs[name]
    two = semicircle_convolve(semicircle_convolve(nu, 0.2), 0.35)
    one = semicircle_convolve(nu, 0.55)
    assert l1_distance(two, one) < 5e-3


@pytest.mark.parametrize("name", ["skewed_bump", "two_bumps"])
def test_mass_mean_and_variance(inputs, name):
    nu = inputs[name]
    out = semicircle_convolve(nu, 0.4)
    assert out.mass == pytest.approx(1.0, abs=1e-8)
    assert out.mean == pytest.approx(nu.mean, abs=1e-4)
    assert out.variance == pytest.approx(nu.variance + 0.4, abs=1e-4)


@given(st.floats(0.05, 2.0))
def test_density_bounded_by_inverse_root_delta(delta):
    g = Grid.uniform(-1.2, 1.2, 241)
    nu = from_function(lambda x: bump_density(x, 0.0, 1.0, 0.3), g)
    out = semicircle_convolve(nu, delta)
    assert out.density.max() <= 1 / (np.pi * np.sqrt(delta)) * (1 + 1e-3)


def test_small_delta_is_nearly_identity(inputs):
    nu = inputs["skewed_bump"]
    assert l1_distance(semicircle_convolve(nu, 1e-4), nu) < 0.02


def test_narrow_bump_bridge_is_semicircle():
    g = Grid.uniform(-1e-3, 1e-3, 101)
    nu = from_function(lambda x: bump_density(x, 0.0, 1e-3), g)
    out = bridge_marginal(nu, 0.5)
    lo, hi = out.support(1e-12)
    assert lo == pytest.approx(-1.0, abs=0.05) and hi == pytest.approx(1.0, abs=0.05)
    assert wasserstein1(out, semicircle(0.25)) < 1e-3


def test_bridge_marginal_adds_bridge_variance(inputs):
    nu = inputs["skewed_bump"]
    t = 0.3
    out = bridge_marginal(nu, t)
    assert moment(out, 2) - out.mean ** 2 == pytest.approx(nu.variance + t * (1 - t), abs=1e-4)


def test_bridge_marginal_keeps_symmetry():
    nu = from_function(lambda x: bump_density(x, 0.0, 1.0), Grid.uniform(-1, 1, 401))
    out = bridge_marginal(nu, 0.4, grid=Grid.uniform(-2, 2, 401))
    assert np.max(np.abs(out.density - out.density[::-1])) < 1e-6


class TestBridgeBound:
    def test_semicircle_saturates_at_center(self):
        t = 0.5
        rep = check_bridge_bounds(semicircle(t * (1 - t), n=1601), t)
        assert rep.ratio == pytest.approx(1.0, abs=0.05)
        assert rep.ok

    @pytest.mark.parametrize("t", [0.2, 0.5, 0.8])
    def test_bridge_marginals_satisfy_bound(self, inputs, t):
        rep = check_bridge_bounds(bridge_marginal(inputs["two_bumps"], t), t)
        assert rep.ok and rep.ratio <= 1.05

    def test_semicircle_edge_is_square_root(self):
        rep = check_bridge_bounds(semicircle(0.25, n=1601), 0.5)
        assert rep.edge_exponents[0] == pytest.approx(0.5, abs=0.05)
        assert rep.edge_exponents[1] == pytest.approx(0.5, abs=0.05)
        assert rep.envelope_ok

    def test_too_concentrated_density_violates(self):
        rep = check_bridge_bounds(semicircle(0.01, n=801), 0.5)
        assert not rep.ok and rep.ratio > 1.05

    def test_rejects_endpoint_times(self):
        with pytest.raises(ValueError):
            check_bridge_bounds(semicircle(0.25), 1.0)


class TestFreeCumulants:
    def test_semicircle_has_only_second_cumulant(self, unit_semicircle):
        m = np.array([moment(unit_semicircle, p) for p in range(1, 9)])
        k = free_cumulants(m)
        assert k[1] == pytest.approx(1.0, abs=1e-5)
        assert np.max(np.abs(np.delete(k, 1))) < 1e-4

    @given(st.lists(st.floats(-1, 1), min_size=1, max_size=8))
    def test_moment_cumulant_round_trip(self, kappa):
        kappa = np.array(kappa)
        back = free_cumulants(moments_from_free_cumulants(kappa))
        assert np.allclose(back, kappa, atol=1e-9)

    def test_free_coupling_at_zero_gives_first_endpoint(self, smooth_bump, unit_semicircle):
        m = free_coupling_moments(smooth_bump, unit_semicircle, 0.0, with_noise=False)
        ref = [moment(smooth_bump, p) for p in range(1, 9)]
        assert np.allclose(m, ref, atol=1e-10)

    def test_free_sum_of_semicircles(self, unit_semicircle):
        # (1-t) S + t S' + sqrt(t(1-t)) S'' is semicircular with variance (1-t)^2 + t^2 + t(1-t)
        t = 0.3
        m = free_coupling_moments(unit_semicircle, unit_semicircle, t)
        v = (1 - t) ** 2 + t ** 2 + t * (1 - t)
        assert m[1] == pytest.approx(v, abs=1e-5)
        assert m[3] == pytest.approx(2 * v * v, abs=1e-4)


def test_quantile_coupling_interpolates_translation():
    mu = semicircle(1.0)
    out = quantile_coupling(mu, mu.affine(1.0, 2.0), 0.5)
    assert out.mean == pytest.approx(1.0, abs=1e-3)
    assert wasserstein1(out, mu.affine(1.0, 1.0)) < 1e-2
