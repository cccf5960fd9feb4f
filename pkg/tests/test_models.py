import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hcizflow.measures import l1_distance, semicircle
from hcizflow.models import (ModelGrid, ModelSpec, OuterOptions, SchemaMismatch, build_graph,
                             catalan_envelope, moment_ladder_residuals, solve_chain, solve_ising,
                             solve_model, solve_potts, solve_qcd1)

from conftest import QUARTIC

COARSE = ModelGrid(nx=48, nt=16)


def bipz_free_energy(g):
    """Gaussian-normalized large-N free energy of x^2/2 + g x^4 at beta = 2 (closed form)."""
    a2 = (np.sqrt(1 + 48 * g) - 1) / (24 * g)
    return -((a2 - 1) * (9 - a2) / 24 - 0.5 * np.log(a2))


@pytest.fixture(scope="module")
def quartic_ising():
    return solve_ising(ModelSpec("ising", potentials=[QUARTIC], grid=COARSE))


class TestSpec:
    def test_single_potential_is_broadcast(self):
        spec = ModelSpec("chain", potentials=[QUARTIC], q=3)
        assert len(spec.potentials) == 3

    @pytest.mark.parametrize("kwargs", [
        dict(kind="lattice", potentials=[QUARTIC]),
        dict(kind="ising", beta=4, potentials=[QUARTIC]),
        dict(kind="ising", potentials=[QUARTIC] * 3),
        dict(kind="ising", potentials=[[0, 0, 0.5, 0, -0.1]] * 2),
        dict(kind="ising", potentials=[[0, 0, 1.0]] * 2),
        dict(kind="potts", q=1, potentials=[QUARTIC]),
        dict(kind="qcd1", lattice_size=1, potentials=[QUARTIC]),
    ])
    def test_invalid_specs_are_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ModelSpec(**kwargs)

    def test_gaussian_allowed_when_quartic_not_required(self):
        ModelSpec("ising", potentials=[[0, 0, 1.0]], require_quartic=False)

    def test_dict_round_trip_and_hash(self):
        spec = ModelSpec("potts", q=3, potentials=[QUARTIC], grid=ModelGrid(nx=40, nt=16))
        back = ModelSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
        assert back.to_dict() == spec.to_dict()
        assert back.config_hash() == spec.config_hash()
        other = ModelSpec("potts", q=3, potentials=[QUARTIC], grid=ModelGrid(nx=41, nt=16))
        assert other.config_hash() != spec.config_hash()

    def test_schema_mismatch(self):
        d = ModelSpec("ising", potentials=[QUARTIC]).to_dict()
        d["schema"] = 99
        with pytest.raises(SchemaMismatch):
            ModelSpec.from_dict(d)

    def test_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown"):
            ModelSpec.from_dict({"kind": "ising", "potentials": [QUARTIC], "colour": 3})

    def test_from_json(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"kind": "qcd1", "potentials": [QUARTIC], "lattice_size": 6}))
        assert ModelSpec.from_json(path).lattice_size == 6

    def test_kind_checked_by_solvers(self):
        with pytest.raises(ValueError):
            solve_potts(ModelSpec("ising", potentials=[QUARTIC]))


class TestGraphs:
    @pytest.mark.parametrize("kind", ["ising", "potts", "chain"])
    def test_q2_is_a_single_bond(self, kind):
        g = build_graph(ModelSpec(kind, potentials=[QUARTIC], q=2))
        assert g.bonds == ((0, 1),)

    def test_potts_is_a_star_and_chain_a_path(self):
        assert build_graph(ModelSpec("potts", q=4, potentials=[QUARTIC])).bonds == ((0, 1), (0, 2), (0, 3))
        assert build_graph(ModelSpec("chain", q=4, potentials=[QUARTIC])).bonds == ((0, 1), (1, 2), (2, 3))

    def test_ring_reduces_to_self_bond(self):
        g = build_graph(ModelSpec("qcd1", potentials=[QUARTIC], lattice_size=5))
        assert g.bonds == ((0, 0),) and g.multiplicity == 5
        assert list(g.degrees) == [2]


class TestGaussianIsing:
    @pytest.mark.parametrize("a", [1.5, 2.0])
    def test_free_energy_closed_form(self, a):
        spec = ModelSpec("ising", potentials=[[0, 0, a / 2]], require_quartic=False, grid=COARSE)
        res = solve_ising(spec)
        assert res.free_energy == pytest.approx(-0.5 * np.log(a * a - 1), abs=5e-4)


class TestQuarticIsing:
    def test_sites_are_identical(self, quartic_ising):
        assert l1_distance(*quartic_ising.measures) < 1e-6

    def test_measures_are_even(self, quartic_ising):
        mu = quartic_ising.measures[0]
        assert abs(mu.mean) < 1e-6

    def test_coupling_raises_free_energy(self, quartic_ising):
        # log Z of the coupled model exceeds that of two independent matrices
        product = 2 * bipz_free_energy(QUARTIC[4])
        assert quartic_ising.free_energy >= product
        assert product == pytest.approx(-0.2433771503066144, abs=1e-12)

    def test_stationarity(self, quartic_ising):
        assert max(np.max(r) for r in quartic_ising.sd_residuals) <= 1e-2
        assert np.max(moment_ladder_residuals(quartic_ising)) <= 5e-2

    def test_objective_history_nonincreasing_to_solver_accuracy(self, quartic_ising):
        assert np.all(np.diff(quartic_ising.objective_history) <= 1e-7)

    def test_summary_fields(self, quartic_ising):
        s = quartic_ising.summary()
        assert s["kind"] == "ising" and s["label"] == "global minimum"
        assert s["config_hash"] == quartic_ising.spec.config_hash()
        json.dumps({k: v for k, v in s.items() if k != "diagnostics"})


class TestReductions:
    @pytest.mark.parametrize("kind", ["chain", "potts"])
    def test_q2_matches_ising(self, quartic_ising, kind):
        res = solve_model(ModelSpec(kind, q=2, potentials=[QUARTIC], grid=COARSE))
        assert res.free_energy == pytest.approx(quartic_ising.free_energy, abs=1e-10)

    def test_star_and_path_agree_for_three_sites(self):
        grid = ModelGrid(nx=40, nt=16)
        chain = solve_chain(ModelSpec("chain", q=3, potentials=[QUARTIC], grid=grid))
        potts = solve_potts(ModelSpec("potts", q=3, potentials=[QUARTIC], grid=grid))
        assert chain.free_energy == pytest.approx(potts.free_energy, abs=1e-8)
        # the two leaves of the star see identical environments
        assert l1_distance(potts.measures[1], potts.measures[2]) < 1e-6
        assert l1_distance(chain.measures[0], chain.measures[2]) < 1e-6

    def test_ring_is_antisymmetric(self):
        res = solve_qcd1(ModelSpec("qcd1", potentials=[QUARTIC], lattice_size=4, grid=COARSE))
        assert res.antisymmetry <= 1e-2
        assert res.free_energy == pytest.approx(4 * res.free_energy_per_site)


@pytest.mark.slow
def test_potts_four_states_reports_local_optimum():
    spec = ModelSpec("potts", q=4, potentials=[QUARTIC], grid=ModelGrid(nx=32, nt=12),
                     solver=OuterOptions(n_starts=2, inner_tol=1e-5))
    res = solve_potts(spec)
    assert res.label == "local optimum"
    assert res.alternatives
    assert all(abs(a["free_energy"] - res.free_energy) < 1e-4 for a in res.alternatives)
    # coarse 32 x 12 grid: stationarity holds to discretization accuracy only
    assert max(np.max(r) for r in res.sd_residuals) <= 2e-2


class TestCatalanEnvelope:
    def test_unit_semicircle_is_extremal(self, unit_semicircle):
        rep = catalan_envelope(unit_semicircle, R=1.0 + 1e-6)
        assert rep.holds
        assert rep.minimal_R == pytest.approx(1.0, abs=1e-4)

    @given(st.floats(0.2, 3.0))
    def test_dilation_scales_radius(self, s):
        mu = semicircle(1.0).affine(s, 0.0)
        rep = catalan_envelope(mu)
        assert rep.minimal_R == pytest.approx(s, rel=1e-3)

    def test_mass_inside_support_bound(self, smooth_bump):
        rep = catalan_envelope(smooth_bump)
        lo, hi = smooth_bump.support()
        assert -rep.support_bound <= lo and hi <= rep.support_bound
        assert rep.moments[0] == pytest.approx(1.0)

    def test_small_radius_fails(self, unit_semicircle):
        assert catalan_envelope(unit_semicircle, R=0.9).holds is False

    def test_rejects_nonpositive_radius(self, unit_semicircle):
        with pytest.raises(ValueError):
            catalan_envelope(unit_semicircle, R=0.0)
