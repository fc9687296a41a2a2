"""World energy-market equilibrium and leakage rates.

Region W takes the world energy price as given, so its demand e_w at given
region-A choices (e_a, r) solves the market-clearing condition

    c'(e_a + e_w) = F'(e_w) * O(e_a + e_w - r)

The left side is W's marginal cost of energy (set by competitive
extraction), the right side its marginal net product.  Under the validated
shape assumptions (c'' >= 0, F'' < 0, O' < 0) the residual
c' - F'*O is strictly increasing in e_w, so a sign-change bracket contains
exactly one root and bisection with a Newton polish always converges.

The derivatives of the implicit response e_w(e_a, r) follow from totally
differentiating the clearing condition; they are returned analytically by
``leakage_rates`` and can be cross-checked against finite differences of
the solved response via ``phi_partials_fd``.
"""

from dataclasses import dataclass

from .errors import DomainError, MaxIterations, NoBracket, SingularDerivative
from .model import _c_raw, _f_raw, scenario_omega

_ITERATION_BUDGET = 200
# denominators below this magnitude make the response derivatives undefined;
# cannot occur for validated scenarios with the damage channel on
_SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class ResponseEvaluation:
    """Solved market equilibrium for one (e_a, r) point.

    e_gross is total world energy use e_a + e_w; e_net = e_gross - r is the
    argument of the damage factor.  residual is the absolute clearing-
    condition residual at the returned e_w; price equals c'(e_gross).
    """

    e_w: float
    price: float
    residual: float
    iterations: int
    e_gross: float
    e_net: float


@dataclass(frozen=True)
class LeakageRates:
    """Response derivatives of W's demand at a solved equilibrium point.

    dphi_dea: change in e_w per unit of e_a, in (-1, 0); its negative is
        the emission-reduction leakage rate.
    dphi_dr: change in e_w per unit of removal, in (0, 1); the removal
        leakage rate.
    alpha: ratio linking the two, dphi_dr = alpha * (-dphi_dea).
    lr_s: supply-side leakage rate c'' / (c'' - F''*O), the leakage that
        would remain with the damage feedback switched off.
    """

    dphi_dea: float
    dphi_dr: float
    alpha: float
    lr_s: float


def _residual(s, e_a, r, e_w):
    """Market-clearing residual and its derivative with respect to e_w."""
    e_gross = e_a + e_w
    _, c_p, c_pp = _c_raw(s.extraction, e_gross)
    _, f_p, f_pp = _f_raw(s.production, e_w)
    om, om_p, _ = scenario_omega(s, e_gross - r)
    res = c_p - f_p * om
    dres = c_pp - f_pp * om - f_p * om_p
    return res, dres


def solve_phi(s, e_a, r):
    """Solve the clearing condition for region W's demand e_w.

    Brackets the root on [0, e_max - e_a], bisects until the interval is
    small, then polishes with Newton steps (safeguarded to stay inside the
    bracket) until |residual| <= tol_root.

    Raises NoBracket when the residual does not change sign on the
    interval and MaxIterations when the budget of 200 iterations is spent.
    Callers must pass a scenario whose validation succeeds; that is not
    re-checked here.
    """
    if e_a < 0.0 or r < 0.0:
        raise DomainError(f"negative inputs e_a={e_a!r}, r={r!r}")
    hi = s.e_max - e_a
    if hi <= 0.0:
        raise NoBracket(f"empty search interval: e_a={e_a!r} >= e_max={s.e_max!r}")

    lo = 0.0
    f_lo, _ = _residual(s, e_a, r, lo)
    f_hi, _ = _residual(s, e_a, r, hi)
    if f_lo == 0.0:
        return _finish(s, e_a, r, lo, abs(f_lo), 0)
    if f_hi == 0.0:
        return _finish(s, e_a, r, hi, abs(f_hi), 0)
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise NoBracket(
            f"clearing residual has no sign change on [0, {hi!r}] "
            f"(endpoints {f_lo!r}, {f_hi!r})"
        )
    # orient so that f(lo) < 0 < f(hi); monotonicity gives f_lo < 0
    if f_lo > 0.0:
        lo, hi = hi, lo

    x = 0.5 * (lo + hi)
    iterations = 0
    # bisect to localize, then let Newton take over
    while iterations < 40:
        f_x, _ = _residual(s, e_a, r, x)
        iterations += 1
        if f_x < 0.0:
            lo = x
        else:
            hi = x
        if abs(hi - lo) < 1e-6 * (1.0 + abs(x)):
            break
        x = 0.5 * (lo + hi)

    f_x, df_x = _residual(s, e_a, r, x)
    while iterations < _ITERATION_BUDGET:
        if abs(f_x) <= s.tol_root:
            break
        if df_x != 0.0:
            step = f_x / df_x
            x_new = x - step
        else:
            x_new = 0.5 * (lo + hi)
        if not (min(lo, hi) <= x_new <= max(lo, hi)):
            x_new = 0.5 * (lo + hi)
        # keep the bracket valid for the bisection fallback
        if f_x < 0.0:
            lo = x
        else:
            hi = x
        x = x_new
        f_x, df_x = _residual(s, e_a, r, x)
        iterations += 1
    else:
        raise MaxIterations(
            f"no convergence to tol_root={s.tol_root!r} in "
            f"{_ITERATION_BUDGET} iterations at (e_a={e_a!r}, r={r!r})"
        )

    # a couple of extra Newton steps push the residual toward machine zero,
    # which keeps noise out of downstream finite differences
    for _ in range(3):
        if abs(f_x) < 1e-15 or df_x == 0.0:
            break
        x_try = x - f_x / df_x
        f_try, df_try = _residual(s, e_a, r, x_try)
        iterations += 1
        if abs(f_try) >= abs(f_x):
            break
        x, f_x, df_x = x_try, f_try, df_try

    return _finish(s, e_a, r, x, abs(f_x), iterations)


def _finish(s, e_a, r, e_w, residual, iterations):
    e_gross = e_a + e_w
    _, price, _ = _c_raw(s.extraction, e_gross)
    return ResponseEvaluation(
        e_w=float(e_w),
        price=float(price),
        residual=float(residual),
        iterations=iterations,
        e_gross=float(e_gross),
        e_net=float(e_gross - r),
    )


def world_price(s, e_gross):
    """World energy price c'(e_gross) set by competitive extraction."""
    if e_gross < 0.0:
        raise DomainError(f"gross energy use {e_gross!r} < 0")
    _, price, _ = _c_raw(s.extraction, e_gross)
    return price


def leakage_rates(s, e_a, r):
    """Analytic response derivatives at the solved equilibrium point.

    Always evaluated at the root of the clearing condition, never at
    user-supplied off-equilibrium pairs.  With the damage channel disabled
    (O' = 0) the removal response and alpha take their limit value 0.
    """
    return rates_at_solution(s, solve_phi(s, e_a, r))


def rates_at_solution(s, sol):
    """Leakage rates from an already-solved ResponseEvaluation."""
    _, _, c_pp = _c_raw(s.extraction, sol.e_gross)
    _, f_p, f_pp = _f_raw(s.production, sol.e_w)
    om, om_p, _ = scenario_omega(s, sol.e_net)

    f_om_p = f_p * om_p
    denom = f_om_p - c_pp
    if abs(denom) <= _SINGULAR_TOL:
        raise SingularDerivative(
            f"F'*O' - c'' = {denom!r} at equilibrium (e_w={sol.e_w!r})"
        )
    dphi_dea = -1.0 / (1.0 + f_pp * om / denom)
    if abs(f_om_p) <= _SINGULAR_TOL:
        dphi_dr = 0.0
        alpha = 0.0
    else:
        dphi_dr = 1.0 / (1.0 + (f_pp * om - c_pp) / f_om_p)
        alpha = 1.0 / (1.0 - c_pp / f_om_p)
    lr_s = c_pp / (c_pp - f_pp * om)
    return LeakageRates(dphi_dea=dphi_dea, dphi_dr=dphi_dr, alpha=alpha, lr_s=lr_s)


def phi_partials_fd(s, e_a, r, step):
    """Central-difference estimates of the response derivatives.

    Independent cross-check of ``leakage_rates``: differentiates the
    root-found response itself.  The four stencil points must all solve.
    """
    if step <= 0.0:
        raise DomainError(f"degenerate stencil: step={step!r}")
    ew_ea_plus = solve_phi(s, e_a + step, r).e_w
    ew_ea_minus = solve_phi(s, e_a - step, r).e_w
    ew_r_plus = solve_phi(s, e_a, r + step).e_w
    ew_r_minus = solve_phi(s, e_a, r - step).e_w
    return (
        (ew_ea_plus - ew_ea_minus) / (2.0 * step),
        (ew_r_plus - ew_r_minus) / (2.0 * step),
    )
