import numpy as np
import pytest

from cdrleak import (
    CommandControlOptimum,
    balanced_scenario,
    classify_trade_case,
    consumption,
    decentralized_check,
    foc_residuals,
    leakage_rates,
    make_scenario,
    optimal_prices,
    optimize_command_control,
    replace_param,
    solve_phi,
    theta,
)
from cdrleak.errors import NoConvergence, NoInteriorOptimum
from cdrleak.model import scenario_omega, _c_raw, _f_raw
from oracles import bisect_response, consumption_direct, fd_rates, grid_argmax, refine_optimum

# pinned regression values for the canonical optimizer scenario (e_max=18)
OPT18 = dict(e_a_star=6.601566881044281, r_star=3.2310811125745396,
             e_w_star=8.811440349470773, c_a_star=21.97086441604597)
PRICES18 = dict(tau_star=0.8063622932444142, sigma_star=1.4693243337723616,
                theta=-0.22098734684264917, tau_hat=0.9128645410959998,
                sigma_hat=1.4132141101510378, wedge_ratio=1.5481093267729626,
                marginal_damage=1.894152630887726)
BALANCED_LAM18 = 0.4193731634267118
CONS_BASELINE_4_1 = 19.46735802993229


def case_b_scenario():
    # importer with weak damages: the trade-balance motive dominates and
    # the tax overtakes the subsidy; tiny removal-cost intercept keeps the
    # removal margin interior
    return make_scenario(fa=10.0, fb=0.5, g1=0.0001, g2=0.00001, c1=1.0, c2=0.4,
                         h1=0.002, h2=0.3, lam=0.0, e_max=18.0)


class TestConsumption:
    def test_all_terms_vanish(self, baseline):
        idle = replace_param(baseline, "lambda", 0.0)
        assert consumption(idle, 0.0, 0.0) == 0.0

    def test_ownership_linearity(self, baseline):
        owner = replace_param(baseline, "lambda", 1.0)
        renter = replace_param(baseline, "lambda", 0.0)
        sol = solve_phi(baseline, 4.0, 1.0)
        c_val, _, _ = _c_raw(baseline.extraction, sol.e_gross)
        pi_r = sol.price * sol.e_gross - c_val
        diff = consumption(owner, 4.0, 1.0) - consumption(renter, 4.0, 1.0)
        assert diff == pytest.approx(pi_r, rel=1e-12)

    def test_matches_independent_recomputation(self, baseline):
        got = consumption(baseline, 4.0, 1.0)
        assert got == pytest.approx(CONS_BASELINE_4_1, abs=1e-10)
        assert got == pytest.approx(consumption_direct(baseline, 4.0, 1.0), abs=1e-10)


class TestTheta:
    def test_balanced_is_zero(self, baseline):
        s = replace_param(baseline, "lambda", 4.0 / 12.0)
        assert theta(s, 4.0, 8.0) == 0.0

    def test_full_owner_negative(self, baseline):
        s = replace_param(baseline, "lambda", 1.0)
        assert theta(s, 4.0, 8.0) < 0.0

    def test_importer_arithmetic(self, baseline):
        s = replace_param(baseline, "lambda", 0.0)
        assert theta(s, 4.0, 8.0) == pytest.approx(0.8, rel=1e-12)

    def test_zero_energy_rejected(self, baseline):
        from cdrleak.errors import DomainError

        with pytest.raises(DomainError):
            theta(baseline, 0.0, 0.0)


class TestFocResiduals:
    def test_matches_consumption_gradient(self, baseline_opt):
        h = 1e-5
        for e_a, r in ((4.0, 1.0), (6.0, 2.5)):
            res_ea, res_r = foc_residuals(baseline_opt, e_a, r)
            g_ea = (consumption(baseline_opt, e_a + h, r)
                    - consumption(baseline_opt, e_a - h, r)) / (2 * h)
            g_r = (consumption(baseline_opt, e_a, r + h)
                   - consumption(baseline_opt, e_a, r - h)) / (2 * h)
            assert res_ea == pytest.approx(g_ea, rel=1e-4, abs=1e-8)
            # the removal condition is the negative of the removal gradient
            assert res_r == pytest.approx(-g_r, rel=1e-4, abs=1e-8)


class TestOptimizer:
    def test_canonical_optimum(self, baseline_opt):
        opt = optimize_command_control(baseline_opt)
        for name, want in OPT18.items():
            assert getattr(opt, name) == pytest.approx(want, abs=1e-6)
        assert opt.e_a_star > 0.0 and opt.r_star > 0.0
        assert opt.foc_residual_ea <= baseline_opt.tol_opt
        assert opt.foc_residual_r <= baseline_opt.tol_opt
        assert opt.hessian_negdef

    def test_producer_surplus_field(self, baseline_opt):
        opt = optimize_command_control(baseline_opt)
        sol = solve_phi(baseline_opt, opt.e_a_star, opt.r_star)
        c_val, _, _ = _c_raw(baseline_opt.extraction, sol.e_gross)
        assert opt.pi_r == pytest.approx(sol.price * sol.e_gross - c_val, rel=1e-12)

    def test_agrees_with_exhaustive_grid(self, baseline_opt):
        opt = optimize_command_control(baseline_opt)
        ea_g, r_g, cell = grid_argmax(baseline_opt, n=400)
        assert abs(opt.e_a_star - ea_g) <= cell
        assert abs(opt.r_star - r_g) <= cell
        # scipy simplex refinement of the grid point lands on the same spot
        ea_ref, r_ref = refine_optimum(baseline_opt, (ea_g, r_g))
        assert opt.e_a_star == pytest.approx(ea_ref, abs=1e-5)
        assert opt.r_star == pytest.approx(r_ref, abs=1e-5)

    def test_warm_start_reaches_same_point(self, baseline_opt):
        cold = optimize_command_control(baseline_opt)
        warm = optimize_command_control(baseline_opt, initial=(5.0, 2.0))
        assert warm.e_a_star == pytest.approx(cold.e_a_star, abs=1e-8)
        assert warm.r_star == pytest.approx(cold.r_star, abs=1e-8)

    def test_prohibitive_removal_cost_hits_boundary(self, baseline_opt):
        expensive = replace_param(baseline_opt, "h1", 50.0)
        ea_g, r_g, _ = grid_argmax(expensive, n=200)
        assert r_g == 0.0
        with pytest.raises(NoInteriorOptimum):
            optimize_command_control(expensive)

    def test_no_damage_energy_condition(self):
        # with the damage channel off and no ownership, removal is pure
        # cost (boundary) and the energy margin balances the marginal
        # product against the price plus the leakage-adjusted markup
        s = make_scenario(fa=10.0, fb=0.5, g1=0.01, g2=0.001, c1=1.0, c2=0.2,
                          h1=0.5, h2=0.3, lam=0.0, e_max=19.5,
                          damage_channel_enabled=False)
        with pytest.raises(NoInteriorOptimum):
            optimize_command_control(s)
        lo, hi = 1.0, 8.8
        f_lo = foc_residuals(s, lo, 0.0)[0]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if (foc_residuals(s, mid, 0.0)[0] > 0.0) == (f_lo > 0.0):
                lo = mid
            else:
                hi = mid
        e_a_root = 0.5 * (lo + hi)
        sol = solve_phi(s, e_a_root, 0.0)
        rates = leakage_rates(s, e_a_root, 0.0)
        markup = (1.0 + rates.dphi_dea) * s.extraction.c2 * e_a_root
        assert 10.0 - 0.5 * e_a_root == pytest.approx(sol.price + markup, abs=1e-9)
        # exhaustive scan along the removal-free edge agrees
        grid = np.linspace(0.0, s.e_max, 400)
        vals = []
        for e_a in grid:
            try:
                vals.append(consumption(s, float(e_a), 0.0))
            except Exception:
                vals.append(-np.inf)
        assert abs(grid[int(np.argmax(vals))] - e_a_root) <= s.e_max / 399


class TestPrices:
    def test_canonical_prices(self, baseline_opt):
        opt = optimize_command_control(baseline_opt)
        prices = optimal_prices(baseline_opt, opt)
        for name, want in PRICES18.items():
            assert getattr(prices, name) == pytest.approx(want, abs=1e-6)
        assert prices.trade_case == "NetExporter"
        assert prices.gap == prices.tau_star - prices.sigma_star

    def test_formulas_from_independent_derivatives(self, baseline_opt):
        opt = optimize_command_control(baseline_opt)
        e_a, r = opt.e_a_star, opt.r_star
        e_w = bisect_response(baseline_opt, e_a, r)
        fd_ea, fd_r = fd_rates(baseline_opt, e_a, r)
        e_gross = e_a + e_w
        f_val, _, _ = _f_raw(baseline_opt.production, e_a)
        _, om_p, _ = scenario_omega(baseline_opt, e_gross - r)
        m = -f_val * om_p
        th = -baseline_opt.extraction.c2 * e_gross * (baseline_opt.lam - e_a / e_gross)
        alpha_fd = fd_r / (-fd_ea)
        prices = optimal_prices(baseline_opt, opt)
        assert prices.marginal_damage == pytest.approx(m, rel=1e-9)
        assert prices.theta == pytest.approx(th, rel=1e-9)
        assert prices.tau_star == pytest.approx((1.0 + fd_ea) * (m + th), rel=1e-6)
        assert prices.sigma_star == pytest.approx(
            (1.0 + alpha_fd * fd_ea) * (m + th) - th, rel=1e-6
        )
        assert prices.tau_hat == pytest.approx((1.0 + fd_ea) * m, rel=1e-6)
        assert prices.sigma_hat == pytest.approx((1.0 - fd_r) * m, rel=1e-6)

    def test_gap_decomposition(self, baseline_opt):
        from cdrleak.policy import gap_decomposition

        opt = optimize_command_control(baseline_opt)
        prices = optimal_prices(baseline_opt, opt)
        leak_term, coef, th = gap_decomposition(baseline_opt, opt)
        assert abs(prices.gap - (leak_term + coef * th)) <= 1e-10
        assert leak_term <= 0.0
        assert coef >= 0.0

    def test_balanced_special_case(self, baseline_opt):
        s_bal, opt = balanced_scenario(baseline_opt)
        assert s_bal.lam == pytest.approx(BALANCED_LAM18, abs=1e-8)
        prices = optimal_prices(s_bal, opt)
        assert abs(prices.theta) <= 1e-9
        assert prices.tau_star == pytest.approx(prices.tau_hat, abs=1e-9)
        assert prices.sigma_star == pytest.approx(prices.sigma_hat, abs=1e-9)
        assert prices.sigma_star > prices.tau_star
        rates = leakage_rates(s_bal, opt.e_a_star, opt.r_star)
        ratio = prices.sigma_star / prices.tau_star
        assert ratio == pytest.approx(1.0 / (1.0 - rates.lr_s), rel=1e-8)


class TestDecentralized:
    def test_closed_loop(self, baseline_opt):
        opt = optimize_command_control(baseline_opt)
        prices = optimal_prices(baseline_opt, opt)
        dec = decentralized_check(baseline_opt, prices.tau_star, prices.sigma_star)
        assert dec.e_a == pytest.approx(opt.e_a_star, abs=1e-6)
        assert dec.r == pytest.approx(opt.r_star, abs=1e-6)
        assert dec.e_w == pytest.approx(opt.e_w_star, abs=1e-6)
        assert max(dec.residual_energy, dec.residual_removal) <= baseline_opt.tol_opt

    def test_untaxed_diagnostic_closed_forms(self):
        s = make_scenario(fa=10.0, fb=0.5, g1=0.01, g2=0.001, c1=1.0, c2=0.0,
                          h1=0.5, h2=0.3, lam=0.0, e_max=40.0,
                          damage_channel_enabled=False)
        dec = decentralized_check(s, 0.0, 0.0)
        assert dec.e_a == pytest.approx(18.0, abs=1e-9)
        assert dec.e_w == pytest.approx(18.0, abs=1e-9)
        assert dec.r == 0.0

    def test_subsidy_at_intercept_gives_zero_removal(self, baseline_opt):
        dec = decentralized_check(baseline_opt, 0.3, 0.5)
        assert dec.r == 0.0
        assert dec.residual_removal == 0.0

    def test_subsidy_below_intercept_gives_zero_removal(self, baseline_opt):
        dec = decentralized_check(baseline_opt, 0.3, 0.2)
        assert dec.r == 0.0

    def test_flat_removal_cost_unsolvable(self, baseline_opt):
        s = replace_param(baseline_opt, "h2", 0.0)
        with pytest.raises(NoConvergence):
            decentralized_check(s, 0.3, 0.9)


class TestTradeCases:
    def test_full_owner_is_net_exporter(self, baseline_opt):
        s = replace_param(baseline_opt, "lambda", 1.0)
        opt = optimize_command_control(s)
        prices = optimal_prices(s, opt)
        report = classify_trade_case(s, opt, prices)
        assert report.case == "NetExporter"
        assert prices.theta < 0.0
        assert prices.tau_star < prices.sigma_star

    def test_balanced_case(self, baseline_opt):
        s_bal, opt = balanced_scenario(baseline_opt)
        prices = optimal_prices(s_bal, opt)
        report = classify_trade_case(s_bal, opt, prices)
        assert report.case == "Balanced"
        assert prices.tau_star < prices.sigma_star

    def test_weak_damage_importer_reverses_ordering(self):
        s = case_b_scenario()
        opt = optimize_command_control(s)
        prices = optimal_prices(s, opt)
        report = classify_trade_case(s, opt, prices)
        assert report.case == "NetImporter"
        assert prices.theta > 0.0
        assert prices.tau_star > prices.sigma_star

    def test_ownership_threshold_of_the_reversal(self):
        from cdrleak.policy import gap_reversal_ownership

        s = case_b_scenario()
        lam_star = gap_reversal_ownership(s, tol=1e-4)
        assert 0.0 < lam_star < 1.0
        for lam, sign in ((lam_star - 0.05, 1.0), (lam_star + 0.05, -1.0)):
            sv = replace_param(s, "lambda", lam)
            opt = optimize_command_control(sv)
            assert sign * optimal_prices(sv, opt).gap > 0.0

    def test_threshold_on_canonical_scenario(self, baseline_opt):
        from cdrleak.policy import gap_reversal_ownership

        # the appropriation motive flips the ordering at low ownership
        lam_star = gap_reversal_ownership(baseline_opt, tol=1e-4)
        assert 0.0 < lam_star < BALANCED_LAM18

    def test_flat_supply_degenerates_to_equal_prices(self, baseline):
        flat = replace_param(replace_param(baseline, "c2", 0.0), "e_max", 19.8)
        sol = solve_phi(flat, 4.0, 1.0)
        probe = CommandControlOptimum(
            e_a_star=4.0, r_star=1.0, e_w_star=sol.e_w, c_a_star=0.0,
            foc_residual_ea=0.0, foc_residual_r=0.0, hessian_negdef=True,
            pi_r=0.0,
        )
        prices = optimal_prices(flat, probe)
        assert prices.theta == 0.0
        assert prices.tau_star == prices.sigma_star
        report = classify_trade_case(flat, probe, prices)
        assert "tax equals subsidy" in report.detail


class TestPriceTaker:
    def test_simple_prices_decentralize_price_taker_optimum(self, baseline_opt):
        s = replace_param(baseline_opt, "lambda", 0.5)
        s = type(s)(**{**s.__dict__, "price_taker": True})
        opt = optimize_command_control(s)
        assert opt.foc_residual_ea <= s.tol_opt
        assert opt.foc_residual_r <= s.tol_opt
        assert opt.hessian_negdef
        prices = optimal_prices(s, opt)
        dec = decentralized_check(s, prices.tau_hat, prices.sigma_hat)
        assert dec.e_a == pytest.approx(opt.e_a_star, abs=1e-6)
        assert dec.r == pytest.approx(opt.r_star, abs=1e-6)

    def test_price_taker_ignores_trade_balance_motive(self, baseline_opt):
        pt = type(baseline_opt)(**{**baseline_opt.__dict__, "price_taker": True})
        opt_pt = optimize_command_control(pt)
        opt = optimize_command_control(baseline_opt)
        # an owner that stops manipulating the price burns less energy
        assert opt_pt.e_a_star < opt.e_a_star
