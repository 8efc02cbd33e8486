from __future__ import annotations

import math
import warnings

import pytest

from lowertail import ratefn
from lowertail.estimators import (
    SmallNWarning,
    estimate_densities,
    fixed_point_residual,
    gnm_triangle_moment,
    implied_eta,
    log_z_by_integration,
    log_z_prediction,
    lower_tail_mc,
    mismatched_null_cutnorm,
    predicted_degree_coeff,
    structure_report,
    thermodynamic_integration,
)
from lowertail.exact import GibbsParams, exact_lower_tail, exact_Z
from lowertail.specfun import lambert_w0


class TestPredictions:
    def test_degree_coeff_anchor(self):
        assert predicted_degree_coeff(0.4, 1.0) == pytest.approx(math.sqrt(lambert_w0(0.32) / 2), rel=1e-14)
        assert predicted_degree_coeff(0.4, 1.0) == pytest.approx(0.3532, rel=2e-3)

    def test_degree_coeff_zeta_zero_limit(self):
        assert predicted_degree_coeff(0.7, 0.0) == pytest.approx(0.7, rel=1e-12)
        assert predicted_degree_coeff(0.7, 1e-9) == pytest.approx(0.7, rel=1e-8)

    @pytest.mark.parametrize("c,eta", [(0.5, 0.5), (0.3, 0.2), (0.2, 0.0)])
    def test_implied_eta_inverts_solve_zeta(self, c, eta):
        assert implied_eta(c, ratefn.solve_zeta(c, eta)) == pytest.approx(eta, abs=1e-12)

    def test_triangle_prediction_is_eta_times_mean(self):
        # (1-zeta)(W/2zeta)^{3/2} = eta c^3 on the zeta(c, eta) curve
        c, eta = 0.5, 0.5
        z = ratefn.solve_zeta(c, eta)
        s = lambert_w0(2 * z * c * c) / (2 * z)
        assert (1 - z) * s**1.5 == pytest.approx(eta * c**3, rel=1e-12)

    def test_log_z_prediction_matches_ratefn(self):
        w = lambert_w0(2 * 0.4**2)
        want = (w**1.5 + 3 * w**0.5) / (6 * math.sqrt(2))
        assert log_z_prediction(400, 0.4, 1.0) == pytest.approx(want * 400**1.5, rel=1e-13)


class TestDensities:
    def test_oracle_small_n(self):
        p = GibbsParams(6, 0.3, 0.5)
        r = estimate_densities(p, chains=4, sweeps=20000, seed=5)
        ex = exact_Z(p)
        assert abs(r.mean_edges - ex.expect_edges) <= 3 * r.stderr_edges
        assert abs(r.mean_triangles - ex.expect_triangles) <= 3 * r.stderr_triangles
        assert r.stderr_edges > 0

    def test_zeta_one_zero_triangles(self):
        r = estimate_densities(GibbsParams.from_c(30, 0.5, 1.0), chains=2, sweeps=200, seed=1)
        assert r.mean_triangles == 0.0
        assert r.eta == 0.0 and r.regime == "inside_window"

    @pytest.mark.parametrize("lam,zeta", [(0.2, 0.4), (1.0, 1.0)])
    def test_dominance(self, lam, zeta):
        p = GibbsParams(6, lam, zeta)
        r = estimate_densities(p, chains=2, sweeps=5000, seed=2)
        m, q = 15, p.p
        assert r.mean_edges <= m * q + 3 * r.stderr_edges
        assert r.mean_edges >= m * q * (1 - q * q) ** 6 - 3 * r.stderr_edges

    def test_to_dict_serialises(self):
        r = estimate_densities(GibbsParams(5, 0.3, 0.5), chains=1, sweeps=100, seed=0)
        d = r.to_dict()
        assert "records" not in d and d["n"] == 5
        assert d["mean_degree_scaled"] == pytest.approx(r.mean_degree / math.sqrt(5))

    def test_determinism(self):
        p = GibbsParams(6, 0.3, 0.5)
        a = estimate_densities(p, 2, 300, seed=9).to_dict()
        b = estimate_densities(p, 2, 300, seed=9).to_dict()
        assert a == b

    def test_fixed_point_residual_guard_and_flag(self):
        p = GibbsParams(6, 0.3, 0.5)
        r = estimate_densities(p, 1, 200, seed=0)
        with pytest.warns(SmallNWarning):
            res = fixed_point_residual(r, p)
        assert math.isfinite(res) and res >= 0
        with pytest.raises(ValueError):
            fixed_point_residual(r, GibbsParams(6, 0.3, 0.0))

    def test_fixed_point_exact_input(self):
        # a report whose degree equals the prediction has zero residual
        p = GibbsParams.from_c(400, 0.4, 1.0)
        r = estimate_densities(GibbsParams(6, 0.3, 0.5), 1, 50, seed=0)
        r.mean_degree = predicted_degree_coeff(p.c, 1.0) * math.sqrt(400)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert fixed_point_residual(r, p) == pytest.approx(0.0, abs=1e-12)


class TestIntegration:
    def test_zeta_zero_analytic(self):
        n, c = 8, 0.9
        est, err = log_z_by_integration(n, c, 0.0, grid=10, chains=1)
        lam = GibbsParams.from_c(n, c, 0.0).lam
        assert est == pytest.approx(28 * math.log1p(lam), rel=1e-14)
        assert err == 0.0

    def test_small_n_against_exact(self):
        n = 6
        c = 0.3 * math.sqrt(n)
        r = thermodynamic_integration(n, c, 0.5, grid=16, chains=4, sweeps=20000, seed=2)
        exact = exact_Z(GibbsParams.from_c(n, c, 0.5)).log_Z
        assert abs(r.log_Z - exact) <= r.error
        assert len(r.nodes) == 17 and r.nodes[0] == 0.0
        assert r.nodes[-1] == pytest.approx(GibbsParams.from_c(n, c, 0.5).lam)

    def test_zeta_one_small_n(self):
        n = 5
        r = thermodynamic_integration(n, 1.2, 1.0, grid=12, chains=4, sweeps=20000, seed=4)
        exact = exact_Z(GibbsParams.from_c(n, 1.2, 1.0)).log_Z
        assert abs(r.log_Z - exact) <= r.error

    def test_grid_guard(self):
        with pytest.raises(ValueError):
            log_z_by_integration(6, 0.5, 0.5, grid=7)

    def test_lower_tail_surrogate_n12(self):
        n, p = 12, 0.25
        est, se = lower_tail_mc(n, p, 0.0, 10**6, seed=3)
        r = thermodynamic_integration(n, p * math.sqrt(n), 1.0, grid=24, chains=4, sweeps=40000, seed=3)
        log_pred = 66 * math.log1p(-p) + r.log_Z
        # the log-scale budget maps to a relative band on the probability
        lo, hi = math.exp(log_pred - r.error), math.exp(log_pred + r.error)
        assert lo - 3 * se <= est <= hi + 3 * se


class TestStructure:
    def test_bipartite_hook(self):
        a, b = 4, 5
        cross = [(u, a + v) for u in range(a) for v in range(b)]
        rep = structure_report(GibbsParams(9, 2.0, 0.0), chains=2, sweeps=40, seed=1, pairs=cross, q=0.3)
        assert rep.maxcut == 1.0

    def test_report_fields(self):
        p = GibbsParams.from_c(40, 0.4, 1.0)
        rep = structure_report(p, chains=1, sweeps=20, seed=2, samples=2)
        assert 0.5 <= rep.maxcut <= 1.0
        assert rep.cutnorm_norm >= 0 and rep.degree_spread >= 0

    def test_null_discriminates(self):
        n = 60
        p = GibbsParams.from_c(n, 0.4, 1.0)
        q = ratefn.conditional_edge_density_q(0.4, 0.0, n)[0]
        rep = structure_report(p, chains=1, sweeps=40, seed=3, samples=4)
        assert rep.cutnorm_norm < mismatched_null_cutnorm(n, q, 4, seed=3)


class TestDirectSimulation:
    def test_sure_event(self):
        assert lower_tail_mc(5, 0.3, 1e6, 100) == (1.0, 0.0)

    def test_against_exact(self):
        n, p = 6, 0.3
        est, se = lower_tail_mc(n, p, 0.0, 10**6, seed=1)
        assert abs(est - exact_lower_tail(n, p, 0.0)) <= 3 * se

    def test_gnm_moment(self):
        m = gnm_triangle_moment(400, 0.3, 100, seed=2)
        assert m.edges == 1200
        assert abs(m.mean / m.prediction - 1) <= 0.05

    def test_gnm_exact_mean_small(self):
        # E X in G(n, m) is C(n,3) (m)_3 / (M)_3
        n, b = 10, 0.5
        r = gnm_triangle_moment(n, b, 4000, seed=1)
        M = 45
        want = math.comb(n, 3) * (r.edges * (r.edges - 1) * (r.edges - 2)) / (M * (M - 1) * (M - 2))
        assert abs(r.mean - want) <= 3 * r.stderr
