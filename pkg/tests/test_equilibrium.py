import pytest

from cdrleak import (
    leakage_rates,
    make_scenario,
    phi_partials_fd,
    replace_param,
    solve_phi,
    world_price,
)
from cdrleak.errors import DomainError, MaxIterations, NoBracket
from oracles import bisect_response, fd_rates

# pinned by the pure-bisection oracle (interval tolerance 1e-13)
EW_BASELINE_4_1 = 9.598984706588237
PRICE_BASELINE_4_1 = 3.7197969413176475
CONS_RATES_4_1 = dict(
    dphi_dea=-0.5171526589143902,
    dphi_dr=0.24713240467784223,
    alpha=0.47787128310743676,
    lr_s=0.3586556997728189,
)


def diagnostic_scenario(e_max=25.0):
    # flat supply with the damage channel off: the response has the closed
    # form (fa - c1) / fb = 18 regardless of the other region's choices
    return make_scenario(fa=10.0, fb=0.5, g1=0.01, g2=0.001, c1=1.0, c2=0.0,
                         h1=0.5, h2=0.3, lam=0.0, e_max=e_max,
                         damage_channel_enabled=False)


class TestSolve:
    def test_closed_form_diagnostic(self):
        sol = solve_phi(diagnostic_scenario(), 2.0, 0.0)
        assert sol.e_w == pytest.approx(18.0, abs=1e-12)

    def test_closed_form_ignores_both_inputs(self):
        s = diagnostic_scenario()
        for e_a in (0.0, 0.5, 2.0, 5.0):
            for r in (0.0, 1.0, 4.0):
                assert solve_phi(s, e_a, r).e_w == pytest.approx(18.0, abs=1e-12)

    def test_baseline_point_matches_bisection_oracle(self, baseline):
        sol = solve_phi(baseline, 4.0, 1.0)
        assert sol.e_w == pytest.approx(EW_BASELINE_4_1, abs=1e-10)
        assert sol.e_w == pytest.approx(bisect_response(baseline, 4.0, 1.0), abs=1e-10)
        assert sol.residual <= baseline.tol_root
        assert sol.e_gross == 4.0 + sol.e_w
        assert sol.e_net == sol.e_gross - 1.0

    def test_price_is_marginal_extraction_cost(self, baseline):
        sol = solve_phi(baseline, 4.0, 1.0)
        assert sol.price == baseline.extraction.c1 + baseline.extraction.c2 * sol.e_gross
        assert sol.price == pytest.approx(PRICE_BASELINE_4_1, abs=1e-12)

    def test_no_bracket_when_cap_too_tight(self, baseline):
        tight = replace_param(baseline, "e_max", 5.0)
        # the residual keeps one sign on the whole interval [0, 0.1]
        for e_w in (0.0, 0.05, 0.1):
            e = 4.9 + e_w
            om = 1.0 - 0.01 * e - 0.001 * e * e
            assert (1.0 + 0.2 * e) - (10.0 - 0.5 * e_w) * om < 0.0
        with pytest.raises(NoBracket):
            solve_phi(tight, 4.9, 0.0)

    def test_empty_interval(self, baseline):
        with pytest.raises(NoBracket):
            solve_phi(baseline, 15.0, 0.0)

    def test_negative_inputs(self, baseline):
        with pytest.raises(DomainError):
            solve_phi(baseline, -1.0, 0.0)
        with pytest.raises(DomainError):
            solve_phi(baseline, 1.0, -1.0)

    def test_iteration_budget(self, baseline, monkeypatch):
        import cdrleak.equilibrium as eq

        monkeypatch.setattr(eq, "_ITERATION_BUDGET", 3)
        with pytest.raises(MaxIterations):
            solve_phi(baseline, 4.0, 1.0)


class TestWorldPrice:
    def test_linear_supply(self, baseline):
        assert world_price(baseline, 10.0) == 3.0

    def test_flat_supply(self):
        s = diagnostic_scenario()
        assert world_price(s, 3.0) == 1.0

    def test_negative_rejected(self, baseline):
        with pytest.raises(DomainError):
            world_price(baseline, -1.0)

    def test_composes_with_solved_response(self, baseline):
        e_w = bisect_response(baseline, 4.0, 1.0)
        assert world_price(baseline, 4.0 + e_w) == pytest.approx(
            solve_phi(baseline, 4.0, 1.0).price, abs=1e-12
        )


class TestLeakageRates:
    def test_baseline_point(self, baseline):
        rates = leakage_rates(baseline, 4.0, 1.0)
        for name, want in CONS_RATES_4_1.items():
            assert getattr(rates, name) == pytest.approx(want, rel=1e-12)

    def test_matches_fd_oracle(self, baseline):
        rates = leakage_rates(baseline, 4.0, 1.0)
        fd_ea, fd_r = fd_rates(baseline, 4.0, 1.0, step=1e-4)
        assert rates.dphi_dea == pytest.approx(fd_ea, rel=1e-5)
        assert rates.dphi_dr == pytest.approx(fd_r, rel=1e-5)

    def test_bounds_and_identity_on_batch(self, baseline):
        for e_a in (0.5, 2.0, 4.0, 5.0):
            for r in (0.0, 1.0, 2.0):
                rates = leakage_rates(baseline, e_a, r)
                assert -1.0 < rates.dphi_dea < 0.0
                assert 0.0 < rates.dphi_dr < 1.0
                assert 0.0 < rates.alpha <= 1.0
                assert 0.0 <= rates.lr_s < 1.0
                link = rates.alpha * (-rates.dphi_dea)
                assert abs(rates.dphi_dr - link) <= 1e-12
                assert rates.dphi_dr < -rates.dphi_dea

    def test_flat_supply_degeneracy(self, baseline):
        # without a supply-side price response the two leakage channels
        # coincide: alpha = 1 and no supply-side leakage remains
        flat = replace_param(replace_param(baseline, "c2", 0.0), "e_max", 19.8)
        rates = leakage_rates(flat, 4.0, 1.0)
        assert rates.alpha == pytest.approx(1.0, abs=1e-15)
        assert rates.lr_s == 0.0
        assert rates.dphi_dr == pytest.approx(-rates.dphi_dea, abs=1e-15)

    def test_wedge_from_supply_side_rate(self, baseline):
        rates = leakage_rates(baseline, 4.0, 1.0)
        wedge = (1.0 - rates.dphi_dr) / (1.0 + rates.dphi_dea)
        assert wedge == pytest.approx(1.0 / (1.0 - rates.lr_s), rel=1e-12)


class TestResponseShape:
    def test_response_falls_with_own_use_rises_with_removal(self, baseline):
        # more energy use at home crowds out the other region; removal
        # lowers damages abroad and pulls its demand up
        base = solve_phi(baseline, 4.0, 1.0).e_w
        assert solve_phi(baseline, 4.5, 1.0).e_w < base
        assert solve_phi(baseline, 3.5, 1.0).e_w > base
        assert solve_phi(baseline, 4.0, 1.5).e_w > base
        assert solve_phi(baseline, 4.0, 0.5).e_w < base

    def test_crowding_out_less_than_one_for_one(self, baseline):
        lo = solve_phi(baseline, 4.0, 1.0)
        hi = solve_phi(baseline, 5.0, 1.0)
        assert 0.0 < lo.e_w - hi.e_w < 1.0


class TestFdPartials:
    def test_matches_analytic(self, baseline):
        rates = leakage_rates(baseline, 4.0, 1.0)
        fd_ea, fd_r = phi_partials_fd(baseline, 4.0, 1.0, 1e-4)
        assert fd_ea == pytest.approx(rates.dphi_dea, rel=1e-5)
        assert fd_r == pytest.approx(rates.dphi_dr, rel=1e-5)

    def test_zero_in_diagnostic_mode(self):
        fd_ea, fd_r = phi_partials_fd(diagnostic_scenario(), 2.0, 1.0, 1e-4)
        assert fd_ea == 0.0
        assert fd_r == 0.0

    def test_degenerate_stencil(self, baseline):
        with pytest.raises(DomainError):
            phi_partials_fd(baseline, 4.0, 1.0, 0.0)
