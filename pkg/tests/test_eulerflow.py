import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from hcizflow.eulerflow import (BridgeNotConverged, BridgeOptions, CrissCrossMesh, FlowField,
                                SpaceTimeGrid, SpanTooSmallError, action_density,
                                characteristics_check, conjugate_action, dual_certificate,
                                euler_residual, prox_action, read_flow_csv, solve_bridge,
                                write_flow_csv, write_summary_json)
from hcizflow.eulerflow.action import fenchel_young_parts
from hcizflow.measures import l1_distance, semicircle

finite = st.floats(-3, 3, allow_nan=False)


class TestAction:
    def test_zero_density_conventions(self):
        out = action_density(np.array([0.0, 0.0, -1.0]), np.array([0.0, 1.0, 0.0]))
        assert out[0] == 0.0 and np.isinf(out[1]) and np.isinf(out[2])

    def test_conjugate_matches_numerical_supremum(self):
        a, b = 0.7, -0.4
        neg = lambda z: -(a * z[0] + b * z[1] - action_density(np.array([z[0]]), np.array([z[1]]))[0])
        res = minimize(neg, [0.3, 0.0], bounds=[(1e-9, None), (None, None)])
        assert -res.fun == pytest.approx(conjugate_action(np.array(a), np.array(b)), rel=1e-5)

    @pytest.mark.parametrize("rho_hat,m_hat,lam", [(0.8, 0.3, 0.5), (0.1, -1.2, 2.0),
                                                   (-0.5, 2.0, 0.7), (1.5, 0.0, 0.1)])
    def test_prox_matches_direct_minimization(self, rho_hat, m_hat, lam):
        def obj(z):
            return lam * action_density(np.array([z[0]]), np.array([z[1]]))[0] + \
                0.5 * ((z[0] - rho_hat) ** 2 + (z[1] - m_hat) ** 2)
        ref = min((minimize(obj, x0, bounds=[(1e-12, None), (None, None)], tol=1e-14)
                   for x0 in ([0.5, 0.0], [1.0, m_hat], [0.05, 0.1 * m_hat])), key=lambda r: r.fun)
        r, m, _ = prox_action(np.array([rho_hat]), np.array([m_hat]), lam)
        assert obj([r[0], m[0]]) <= ref.fun + 1e-9
        assert r[0] == pytest.approx(ref.x[0], abs=1e-4)

    def test_prox_returns_origin_when_inactive(self):
        r, m, _ = prox_action(np.array([-1.0]), np.array([0.5]), 1.0)
        assert r[0] == 0.0 and m[0] == 0.0

    @given(st.floats(0, 3), finite, finite, finite)
    def test_fenchel_young_parts_are_nonnegative_and_sum_to_gap(self, rho, m, a, b):
        rho_a, m_a, a_a, b_a = (np.array([v]) for v in (rho, m, a, b))
        if rho == 0:
            m_a = np.zeros(1)
        gap = action_density(rho_a, m_a) + conjugate_action(a_a, b_a) - a_a * rho_a - b_a * m_a
        parts = fenchel_young_parts(rho_a, m_a, a_a, b_a)
        assert all(p[0] >= -1e-12 for p in parts)
        assert sum(p[0] for p in parts) == pytest.approx(gap[0], abs=1e-9 * (1 + abs(gap[0])))


class TestMesh:
    def test_rejects_bad_grids(self):
        with pytest.raises(ValueError):
            SpaceTimeGrid(1.0, 0.0, 8, 4)
        with pytest.raises(ValueError):
            SpaceTimeGrid(0.0, 1.0, 2, 4)

    def test_gradient_is_exact_on_affine_functions(self):
        mesh = CrissCrossMesh(SpaceTimeGrid(-1.0, 2.0, 6, 4))
        g = mesh.gradient @ (3.0 * mesh.node_x - 2.0 * mesh.node_t + 1.0)
        nT = mesh.n_tri
        assert np.allclose(g[:nT], -2.0) and np.allclose(g[nT:], 3.0)

    def test_gradient_kills_constants(self):
        mesh = CrissCrossMesh(SpaceTimeGrid(0.0, 1.0, 5, 3))
        assert np.allclose(mesh.gradient @ np.ones(mesh.n_nodes), 0.0)

    def test_endpoint_load_carries_unit_mass(self):
        mesh = CrissCrossMesh(SpaceTimeGrid(-3.0, 3.0, 40, 4))
        assert mesh.endpoint_load(semicircle(1.0)).sum() == pytest.approx(1.0, abs=1e-10)


class TestBridge:
    def test_converges_with_small_gap(self, sc_bridge_coarse):
        res = sc_bridge_coarse
        assert res.converged and res.rel_gap <= 1e-5 and res.residual <= 1e-5

    def test_slabs_carry_unit_mass(self, sc_bridge_coarse):
        assert np.allclose(sc_bridge_coarse.flow.slab_mass(), 1.0, atol=1e-4)

    def test_equal_endpoints_have_symmetric_flow(self, sc_bridge_coarse):
        rc = sc_bridge_coarse.flow.rho_cells
        assert np.max(np.abs(rc - rc[::-1])) < 1e-3 * rc.max()
        assert np.max(np.abs(rc - rc[:, ::-1])) < 1e-3 * rc.max()

    def test_marginals_spread_at_midtime(self, sc_bridge_coarse):
        flow = sc_bridge_coarse.flow
        mid = flow.marginal_at(0.5)
        end = flow.marginal(0)
        assert mid.variance > end.variance - 1e-3

    def test_translation_invariance(self, asym_bridge):
        c = 0.7
        g = asym_bridge.flow.grid
        mu0, mu1 = semicircle(1.0), semicircle(0.5, center=0.3)
        moved = solve_bridge(mu0.affine(1.0, c), mu1.affine(1.0, c), 2.0, g.shifted(c),
                             BridgeOptions(tol=1e-5))
        assert moved.J == pytest.approx(asym_bridge.J, abs=1e-4)
        assert np.max(np.abs(moved.flow.rho_cells - asym_bridge.flow.rho_cells)) < 1e-3

    def test_reversal_negates_momentum(self, asym_bridge):
        g = asym_bridge.flow.grid
        mu0, mu1 = semicircle(1.0), semicircle(0.5, center=0.3)
        back = solve_bridge(mu1, mu0, 2.0, g, BridgeOptions(tol=1e-5))
        assert back.action == pytest.approx(asym_bridge.action, rel=1e-4)
        assert back.I == pytest.approx(asym_bridge.I, abs=1e-4)
        scale = asym_bridge.flow.rho_cells.max()
        assert np.max(np.abs(back.flow.rho_cells[::-1] - asym_bridge.flow.rho_cells)) < 1e-3 * scale
        assert np.max(np.abs(back.flow.m_cells[::-1] + asym_bridge.flow.m_cells)) < 1e-3 * scale

    def test_rate_relation_between_J_and_action(self, asym_bridge):
        r = asym_bridge
        assert r.J == pytest.approx(0.25 * r.beta * (r.action - (r.sigma1 - r.sigma0)), abs=1e-12)

    def test_dual_nondecreasing_late(self, sc_bridge_coarse):
        dual = np.array([h["dual"] for h in sc_bridge_coarse.history])
        late = dual[len(dual) // 2:]
        assert np.all(np.diff(late) >= -1e-6 * abs(late[-1]))

    def test_initialisation_does_not_change_answer(self):
        mu0, mu1 = semicircle(1.0), semicircle(0.5, center=0.3)
        g = SpaceTimeGrid(-3.5, 3.8, 48, 24)
        a = solve_bridge(mu0, mu1, 2.0, g, BridgeOptions(tol=1e-6, init="linear"))
        b = solve_bridge(mu0, mu1, 2.0, g, BridgeOptions(tol=1e-6, init="displacement"))
        assert abs(a.J - b.J) <= 1e-4 * abs(a.J)
        for n in (0, g.nt // 2, g.nt - 1):
            assert l1_distance(a.flow.marginal(n), b.flow.marginal(n)) <= 5e-3

    def test_reports_non_convergence(self):
        mu = semicircle(1.0)
        with pytest.raises(BridgeNotConverged) as err:
            solve_bridge(mu, semicircle(0.5), 2.0, SpaceTimeGrid(-3.5, 3.5, 32, 16),
                         BridgeOptions(tol=1e-9, max_iter=50))
        assert err.value.history and err.value.result is not None

    def test_narrow_span_is_rejected(self):
        mu = semicircle(1.0)
        with pytest.raises(SpanTooSmallError):
            solve_bridge(mu, mu, 2.0, SpaceTimeGrid(-2.1, 2.1, 32, 16), BridgeOptions(tol=1e-4))

    def test_rejects_nonpositive_beta(self):
        mu = semicircle(1.0)
        with pytest.raises(ValueError):
            solve_bridge(mu, mu, 0.0, SpaceTimeGrid(-3.5, 3.5, 16, 8))


class TestCertificate:
    def test_zero_potential_gives_zero_dual(self, asym_bridge):
        flow = asym_bridge.flow
        mesh = CrissCrossMesh(flow.grid)
        cert = dual_certificate(flow, phi=np.zeros(mesh.n_nodes))
        assert cert.potential.dual_value == pytest.approx(0.0, abs=1e-14)
        assert cert.gap == pytest.approx(cert.primal, rel=1e-12)

    def test_gap_splits_into_three_parts(self, asym_bridge):
        cert = dual_certificate(asym_bridge.flow, result=asym_bridge)
        parts = cert.velocity_error + cert.density_error + cert.hj_error
        assert min(cert.velocity_error, cert.density_error, cert.hj_error) >= 0
        assert parts == pytest.approx(cert.gap, abs=1e-10)
        assert cert.gap >= -1e-12

    def test_solver_potential_certifies_the_flow(self, asym_bridge):
        cert = dual_certificate(asym_bridge.flow, result=asym_bridge)
        assert cert.load_gap is not None
        assert abs(cert.load_gap) <= 1e-3 * asym_bridge.action


class TestEulerResidual:
    def test_residuals_shrink_under_refinement(self, sc_bridge_coarse, sc_bridge_fine):
        fine = euler_residual(sc_bridge_fine.flow)
        coarse = euler_residual(sc_bridge_coarse.flow, family=fine.family)
        assert coarse.max_continuity / fine.max_continuity >= 1.8
        assert coarse.max_momentum / fine.max_momentum >= 1.8

    @staticmethod
    def _static_flow(nx, nt):
        g = SpaceTimeGrid(-2.0, 2.0, nx, nt)
        x = g.x_centers
        rho = np.broadcast_to(np.clip(1 - x * x, 0, None)[None, :, None], (nt, nx, 4)).copy()
        return FlowField(g, rho, np.zeros_like(rho))

    def test_static_flow_residual_is_pure_quadrature_error(self):
        # a time-independent density with zero momentum solves continuity exactly
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            coarse = euler_residual(self._static_flow(40, 20))
            fine = euler_residual(self._static_flow(80, 40), family=coarse.family)
        assert coarse.max_continuity < 5e-3
        assert fine.max_continuity < coarse.max_continuity / 3


class TestCharacteristics:
    def test_mismatch_vanishes_at_start_and_stays_small(self, sc_bridge_fine):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = characteristics_check(sc_bridge_fine.flow)
        assert rep.mismatch[0] == 0.0
        assert rep.max_mismatch <= 5e-2


class TestFlowField:
    def test_marginal_at_interpolates_between_slabs(self, sc_bridge_coarse):
        flow = sc_bridge_coarse.flow
        tc = flow.grid.t_centers
        mid = flow.marginal_at(0.5 * (tc[3] + tc[4]))
        expected = 0.5 * (flow.marginal(3).density + flow.marginal(4).density)
        assert np.allclose(mid.density, expected)
        assert np.allclose(flow.marginal_at(0.0).density, flow.marginal(0).density)
        assert np.allclose(flow.marginal_at(1.0).density, flow.marginal(flow.grid.nt - 1).density)

    def test_csv_round_trip(self, sc_bridge_coarse, tmp_path):
        flow = sc_bridge_coarse.flow
        write_flow_csv(flow, tmp_path / "flow.csv")
        back = read_flow_csv(tmp_path / "flow.csv")
        assert back.grid.nx == flow.grid.nx and back.grid.nt == flow.grid.nt
        assert back.grid.a == pytest.approx(flow.grid.a) and back.grid.b == pytest.approx(flow.grid.b)
        assert np.array_equal(back.rho_cells, flow.rho_cells)
        assert np.array_equal(back.m_cells, flow.m_cells)

    def test_summary_json(self, sc_bridge_coarse, tmp_path):
        out = write_summary_json(sc_bridge_coarse, tmp_path / "s.json", extra={"tag": "x"})
        assert out["tag"] == "x" and out["converged"] is True
        assert (tmp_path / "s.json").read_text().startswith("{")
