import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from hcizflow.measures import semicircle
from hcizflow.models import ModelSpec
from hcizflow.rmt import (Histogram, MCConfig, MCEstimate, SpectrumPair, VarianceOverflowError,
                          effective_sample_size, gibbs_two_matrix, haar_matrices, hciz_exact,
                          hciz_mc, matrix_bridge_sampler, quantile_spectrum, tilted_unitaries,
                          wasserstein_to_measure)

from conftest import QUARTIC

spectrum = st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=6, unique=True)


def two_by_two_integral(d, e):
    """N = 2: |U_11|^2 is uniform on [0, 1] under Haar measure, so the integral is one-dimensional."""
    a = d[0] * e[0] + d[1] * e[1]
    b = d[0] * e[1] + d[1] * e[0]
    val, _ = quad(lambda p: np.exp(2 * (p * a + (1 - p) * b)), 0, 1, epsabs=1e-14, epsrel=1e-14)
    return np.log(val) / 4


def well_separated(x):
    x = np.sort(x)
    return np.min(np.diff(x)) > 0.05


class TestExact:
    def test_two_by_two_matches_quadrature(self):
        d, e = np.array([0.3, -0.5]), np.array([1.0, 0.2])
        assert hciz_exact(SpectrumPair(d, e)) == pytest.approx(-0.04316047050823822, abs=1e-14)
        assert hciz_exact(SpectrumPair(d, e)) == pytest.approx(two_by_two_integral(d, e), abs=1e-13)

    def test_two_by_two_unit_steps(self):
        # the integral reduces to the mean of exp(2p) over [0, 1]
        value = hciz_exact(SpectrumPair([0.0, 1.0], [0.0, 1.0]))
        assert value == pytest.approx(0.25 * np.log((np.e ** 2 - 1) / 2), abs=1e-14)
        assert value == pytest.approx(0.2903598403927989, abs=1e-14)

    @pytest.mark.parametrize("d,e", [([0.0, 0.0, 0.0], [1.0, 2.0, 3.0]),
                                     ([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])])
    def test_zero_spectrum_gives_zero(self, d, e):
        assert hciz_exact(SpectrumPair(d, e)) == 0.0

    @given(spectrum, st.floats(-2, 2))
    def test_shift_adds_mean(self, d, c):
        d = np.array(d)
        if not well_separated(d):
            return
        e = np.linspace(-1, 1, d.size) ** 3 + 0.2
        base = hciz_exact(SpectrumPair(d, e))
        moved = hciz_exact(SpectrumPair(d + c, e))
        assert moved == pytest.approx(base + c * e.mean(), abs=1e-10)

    @given(spectrum, st.randoms())
    def test_swap_and_permutation_invariance(self, d, rnd):
        d = np.array(d)
        if not well_separated(d):
            return
        e = np.cos(np.arange(d.size) + 0.5) * 1.3
        base = hciz_exact(SpectrumPair(d, e))
        perm = list(range(d.size))
        rnd.shuffle(perm)
        assert hciz_exact(SpectrumPair(e, d)) == pytest.approx(base, abs=1e-12)
        assert hciz_exact(SpectrumPair(d[perm], e)) == pytest.approx(base, abs=1e-12)

    def test_coincident_entries_warn(self):
        with pytest.warns(RuntimeWarning):
            hciz_exact(SpectrumPair([0.0, 1.0, 1.0], [0.0, 0.5, 1.0]))

    def test_info_reports_precision(self):
        val, info = hciz_exact(SpectrumPair([0.0, 1.0, 2.0], [0.5, 1.0, 3.0]), return_info=True)
        assert info.value == val and info.precision_bits >= 128 and not info.perturbed

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            hciz_exact(SpectrumPair([0.0, 1.0], [0.0, 1.0]), N=3)


class TestMonteCarlo:
    def test_zero_spectrum_is_exactly_zero(self):
        est = hciz_mc(SpectrumPair(np.zeros(4), np.arange(4.0)))
        assert est.value == 0.0 and est.stderr == 0.0

    def test_agrees_with_determinant(self):
        pair = SpectrumPair(np.linspace(-0.6, 0.6, 4), np.linspace(-0.4, 0.8, 4) ** 3)
        est = hciz_mc(pair, cfg=MCConfig(samples=20_000, seed=3))
        assert abs(est.value - hciz_exact(pair)) <= 3 * est.stderr
        assert est.stderr < 1e-3

    def test_refuses_degenerate_weights(self):
        pair = SpectrumPair(np.linspace(-10, 10, 6), np.linspace(-10, 10, 6))
        with pytest.raises(VarianceOverflowError):
            hciz_mc(pair, cfg=MCConfig(samples=2000))

    def test_same_seed_same_estimate(self):
        pair = SpectrumPair([0.0, 0.5, 1.0], [0.2, 0.1, -0.3])
        cfg = MCConfig(samples=4000, batch=500, seed=11)
        assert hciz_mc(pair, cfg=cfg) == hciz_mc(pair, cfg=cfg)

    def test_estimate_json(self):
        est = MCEstimate(np.float64(0.5), np.float64(0.01), np.int64(100), 7)
        out = json.loads(est.to_json())
        assert out == {"value": 0.5, "stderr": 0.01, "n_samples": 100, "seed": 7}

    @pytest.mark.parametrize("kwargs", [dict(samples=1), dict(thin=0), dict(seed=-1)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            MCConfig(**kwargs)


class TestHaar:
    @pytest.mark.parametrize("beta", [1, 2])
    def test_unitary_and_flat_moduli(self, beta):
        U = haar_matrices(np.random.default_rng(0), 5, 4000, beta)
        eye = np.eye(5)
        assert np.allclose(U @ np.conj(np.swapaxes(U, 1, 2)), eye, atol=1e-12)
        assert np.allclose((np.abs(U) ** 2).mean(axis=0), 1 / 5, atol=0.01)

    def test_rejects_other_beta(self):
        with pytest.raises(ValueError):
            haar_matrices(np.random.default_rng(0), 3, 2, beta=4)

    def test_tilted_unitaries_are_unitary(self):
        U = tilted_unitaries(np.linspace(-1, 1, 6), np.linspace(-1, 1, 6), 2, 5, seed=1,
                             burn_in=100, gap=5)
        assert np.allclose(U @ np.conj(np.swapaxes(U, 1, 2)), np.eye(6), atol=1e-10)


class TestHistograms:
    def test_mass_and_csv(self, tmp_path):
        h = Histogram.from_samples(np.random.default_rng(0).normal(size=1000), 20)
        assert h.mass.sum() == pytest.approx(1.0)
        h.to_csv(tmp_path / "h.csv")
        data = np.loadtxt(tmp_path / "h.csv", delimiter=",", skiprows=1)
        assert data.shape == (20, 3) and np.allclose(data[:, 2], h.mass)
        assert h.to_measure().mass == pytest.approx(1.0, abs=1e-9)

    def test_wasserstein_of_quantile_spectrum(self):
        mu = semicircle(1.0)
        assert wasserstein_to_measure(quantile_spectrum(mu, 2000), mu) < 2e-3


class TestEffectiveSampleSize:
    def test_independent_draws(self):
        x = np.random.default_rng(1).normal(size=4000)
        assert 0.7 * x.size < effective_sample_size(x) <= 1.3 * x.size

    def test_correlated_chain(self):
        rng = np.random.default_rng(2)
        x = np.zeros(20_000)
        for k in range(1, x.size):
            x[k] = 0.9 * x[k - 1] + rng.normal()
        assert effective_sample_size(x) == pytest.approx(x.size / 19, rel=0.35)


@pytest.fixture(scope="module")
def spec():
    return ModelSpec("ising", potentials=[QUARTIC])


class TestGibbs:
    def test_two_matrices_share_a_law(self, spec):
        g = gibbs_two_matrix(spec, MCConfig(sweeps=4000, burn_in=500, thin=10, seed=1), N=8)
        assert 0.1 <= g.acceptance[0] <= 0.7
        a, b = g.hist_a.samples, g.hist_b.samples
        assert abs(np.mean(a ** 2) - np.mean(b ** 2)) < 0.05 * np.mean(a ** 2)
        assert abs(np.mean(a)) < 0.05

    def test_uncoupled_matches_one_matrix_second_moment(self, spec):
        g = gibbs_two_matrix(spec, MCConfig(sweeps=4000, burn_in=500, thin=10, seed=2, coupling=0.0),
                             N=12)
        a2 = (np.sqrt(1 + 48 * 0.1) - 1) / 2.4
        m2 = a2 * (4 - a2) / 3
        assert np.mean(g.hist_a.samples ** 2) == pytest.approx(m2, rel=0.05)

    def test_same_seed_same_histograms(self, spec, tmp_path):
        cfg = MCConfig(sweeps=300, burn_in=50, thin=5, seed=9)
        for name in ("x", "y"):
            gibbs_two_matrix(spec, cfg, N=6).hist_a.to_csv(tmp_path / f"{name}.csv")
        assert (tmp_path / "x.csv").read_bytes() == (tmp_path / "y.csv").read_bytes()

    def test_needs_ising_spec(self):
        with pytest.raises(ValueError):
            gibbs_two_matrix(ModelSpec("potts", q=3, potentials=[QUARTIC]))


class TestBridgeSampler:
    def test_start_time_reproduces_first_spectrum(self):
        mu0, mu1 = semicircle(1.0), semicircle(0.5)
        out = matrix_bridge_sampler(mu0, mu1, 8, [0.0, 0.5], coupling="free", n_paths=3)
        s = out.histograms[0.0].samples
        assert np.allclose(np.sort(s), np.sort(np.tile(quantile_spectrum(mu0, 8), 3)), atol=1e-10)

    def test_zero_spectra_give_bridge_semicircle(self):
        pair = SpectrumPair(np.zeros(40), np.zeros(40))
        mu = semicircle(1.0)
        out = matrix_bridge_sampler(mu, mu, 40, [0.5], coupling="free", n_paths=10, spectra=pair)
        assert wasserstein_to_measure(out.histograms[0.5].samples, semicircle(0.25)) < 0.03

    def test_conditioned_runs_are_reproducible(self, tmp_path):
        mu0, mu1 = semicircle(1.0), semicircle(0.5, center=0.3)
        for name in ("x", "y"):
            out = matrix_bridge_sampler(mu0, mu1, 6, [0.5], MCConfig(seed=4), n_paths=3,
                                        tilt_burn_in=50, tilt_gap=5)
            out.histograms[0.5].to_csv(tmp_path / f"{name}.csv")
        assert (tmp_path / "x.csv").read_bytes() == (tmp_path / "y.csv").read_bytes()

    def test_rejects_bad_arguments(self):
        mu = semicircle(1.0)
        with pytest.raises(ValueError):
            matrix_bridge_sampler(mu, mu, 4, [1.0], coupling="free")
        with pytest.raises(ValueError):
            matrix_bridge_sampler(mu, mu, 4, [0.5], coupling="other")
