"""Region A's optimal policy: quantities, prices, and decentralization.

The government of A chooses energy use e_a and removal r to maximize
consumption

    C = F(e_a)*O(e_net) + lam*(p*E - c(E)) - p*e_a - h(r)

where E = e_a + e_w with e_w the solved market response, p = c'(E), and
e_net = E - r.  The first-order conditions equate A's marginal net product
minus the energy price (and the marginal removal cost) to leakage-adjusted
marginal damages plus a trade-balance term

    theta = -c'' * E * (lam - e_a / E)

which captures A's incentive to move the world energy price in its favor.
Matching the planner conditions against competitive firm behavior
(F'(e_a)*O = p + tau, h' = sigma) yields the decentralizing carbon tax and
removal subsidy.

Optimization strategy: a coarse 64x64 scan locates the basin, a
derivative-free simplex descends, and a damped Newton iteration on the
analytic first-order conditions polishes to tol_opt.  Concavity at the
solution is verified numerically because second-order conditions involve
third derivatives that are impractical to sign in general.
"""

import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import rates_at_solution, solve_phi
from .errors import (
    AssertionFailure,
    DamageCollapse,
    DomainError,
    MaxIterations,
    NoBracket,
    NoConvergence,
    NoInteriorOptimum,
    NonPhysical,
)
from .model import _c_raw, _f_raw, _h_raw, scenario_omega

_GRID_N = 64
_CLAMP = 1e-9
_BOUNDARY_TOL = 1e-7
_SIMPLEX_MAX_ITER = 600
_NEWTON_BUDGET = 40
_HESS_STEP = 1e-4
_BALANCED_CASE_TOL = 1e-9


@dataclass(frozen=True)
class CommandControlOptimum:
    """Planner's direct-quantity optimum and its diagnostics.

    foc_residual_ea / foc_residual_r are the absolute residuals of the
    energy and removal first-order conditions (the price-taking variants
    when the scenario is price_taker).  hessian_negdef reports the
    numerical second-order check; pi_r is total resource-producer surplus
    p*E - c(E) at the optimum.
    """

    e_a_star: float
    r_star: float
    e_w_star: float
    c_a_star: float
    foc_residual_ea: float
    foc_residual_r: float
    hessian_negdef: bool
    pi_r: float


@dataclass(frozen=True)
class PolicyPrices:
    """Optimal carbon tax and removal subsidy with their decomposition.

    tau_star / sigma_star decentralize the planner optimum.  tau_hat /
    sigma_hat are the simplified prices that apply when the resource trade
    balance term vanishes; their ratio (wedge_ratio) equals
    1 / (1 - lr_s).  marginal_damage is -F*O' at the optimum and gap is
    tau_star - sigma_star.
    """

    tau_star: float
    sigma_star: float
    theta: float
    tau_hat: float
    sigma_hat: float
    wedge_ratio: float
    gap: float
    trade_case: str
    marginal_damage: float


@dataclass(frozen=True)
class DecentralizedAllocation:
    """Fixed point of competitive firm behavior under given (tau, sigma)."""

    e_a: float
    r: float
    e_w: float
    residual_energy: float
    residual_removal: float
    iterations: int


@dataclass(frozen=True)
class CaseReport:
    """Trade-balance case of an optimum with the price ordering observed."""

    case: str
    theta: float
    tau_star: float
    sigma_star: float
    gap: float
    detail: str


def consumption(s, e_a, r):
    """Region A's consumption at (e_a, r) with the market response solved."""
    sol = solve_phi(s, e_a, r)
    return _consumption_at(s, e_a, r, sol)


def _consumption_at(s, e_a, r, sol):
    f_val, _, _ = _f_raw(s.production, e_a)
    om, _, _ = scenario_omega(s, sol.e_net)
    if om <= 0.0:
        raise DamageCollapse(f"damage factor {om!r} <= 0 at net emissions {sol.e_net!r}")
    c_val, _, _ = _c_raw(s.extraction, sol.e_gross)
    h_val, _ = _h_raw(s.removal, r)
    pi_r = sol.price * sol.e_gross - c_val
    return f_val * om + s.lam * pi_r - sol.price * e_a - h_val


def _consumption_frozen(s, e_a, r, p_bar, pi_r_bar):
    """Perceived consumption when the price and producer surplus are taken
    as given (their dependence on e_a and r is ignored)."""
    sol = solve_phi(s, e_a, r)
    f_val, _, _ = _f_raw(s.production, e_a)
    om, _, _ = scenario_omega(s, sol.e_net)
    if om <= 0.0:
        raise DamageCollapse(f"damage factor {om!r} <= 0 at net emissions {sol.e_net!r}")
    h_val, _ = _h_raw(s.removal, r)
    return f_val * om + s.lam * pi_r_bar - p_bar * e_a - h_val


def theta(s, e_a, e_w):
    """Resource trade balance term -c'' * E * (lam - e_a/E)."""
    e_gross = e_a + e_w
    if e_gross <= 0.0:
        raise DomainError(f"gross energy use {e_gross!r} <= 0")
    return -s.extraction.c2 * e_gross * (s.lam - e_a / e_gross)


def foc_residuals(s, e_a, r):
    """Signed first-order-condition residuals of the planner problem.

    Returns (res_ea, res_r).  res_ea equals the gradient of consumption in
    e_a; res_r equals its negative gradient in r (both vanish at an
    interior optimum).  Price-taker scenarios drop the trade-balance term.
    """
    sol = solve_phi(s, e_a, r)
    rates = rates_at_solution(s, sol)
    f_val, f_p, _ = _f_raw(s.production, e_a)
    om, om_p, _ = scenario_omega(s, sol.e_net)
    _, h_p = _h_raw(s.removal, r)
    marginal_damage = -f_val * om_p
    th = 0.0 if s.price_taker else theta(s, e_a, sol.e_w)
    res_ea = f_p * om - sol.price - (1.0 + rates.dphi_dea) * (marginal_damage + th)
    res_r = h_p - ((1.0 + rates.alpha * rates.dphi_dea) * (marginal_damage + th) - th)
    return res_ea, res_r


# ---------------------------------------------------------------------------
# grid scan (vectorized over the whole lattice)

def _phi_on_grid(s, ea, r):
    """Lockstep bisection of the clearing condition over arrays; NaN where
    no sign-change bracket exists."""
    ex, pr, dm = s.extraction, s.production, s.damage
    damages_on = s.damage_channel_enabled

    def res(ew):
        e_gross = ea + ew
        cp = ex.c1 + ex.c2 * e_gross
        fp = pr.fa - pr.fb * ew
        if damages_on:
            en = e_gross - r
            om = 1.0 - dm.g1 * en - dm.g2 * en * en
        else:
            om = 1.0
        return cp - fp * om

    hi = np.maximum(s.e_max - ea, 0.0)
    lo = np.zeros_like(hi)
    valid = (hi > 0.0) & (res(lo) < 0.0) & (res(hi) > 0.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        neg = res(mid) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    ew = 0.5 * (lo + hi)
    return np.where(valid, ew, np.nan)


def _consumption_on_grid(s, ea, r, ew):
    ex, pr, dm, rm = s.extraction, s.production, s.damage, s.removal
    e_gross = ea + ew
    price = ex.c1 + ex.c2 * e_gross
    c_val = ex.c1 * e_gross + 0.5 * ex.c2 * e_gross * e_gross
    f_val = pr.fa * ea - 0.5 * pr.fb * ea * ea
    if s.damage_channel_enabled:
        en = e_gross - r
        om = 1.0 - dm.g1 * en - dm.g2 * en * en
    else:
        om = np.ones_like(e_gross)
    h_val = rm.h1 * r + 0.5 * rm.h2 * r * r
    cons = f_val * om + s.lam * (price * e_gross - c_val) - price * ea - h_val
    return np.where(np.isnan(ew) | (om <= 0.0), -np.inf, cons)


def _grid_scan(s):
    axis = np.linspace(0.0, s.e_max, _GRID_N)
    ea, r = np.meshgrid(axis, axis, indexing="ij")
    ew = _phi_on_grid(s, ea, r)
    cons = _consumption_on_grid(s, ea, r, ew)
    if not np.any(np.isfinite(cons)):
        raise NoBracket("no solvable market equilibrium anywhere on the search grid")
    k = int(np.argmax(cons))
    return float(ea.ravel()[k]), float(r.ravel()[k])


# ---------------------------------------------------------------------------
# simplex descent

def _nelder_mead(fun, x0, box, xatol=1e-8, fatol=1e-12, max_iter=_SIMPLEX_MAX_ITER):
    """Minimize fun over a clamped rectangle; returns the best vertex."""
    lo = np.array([box[0][0], box[1][0]])
    hi = np.array([box[0][1], box[1][1]])

    def eval_at(x):
        if np.any(x < lo) or np.any(x > hi):
            return math.inf
        try:
            return fun(x)
        except (NoBracket, DamageCollapse, DomainError):
            return math.inf

    step = 0.02 * (hi - lo)
    verts = [np.array(x0, dtype=float)]
    for i in range(2):
        v = verts[0].copy()
        v[i] = v[i] + step[i] if v[i] + step[i] <= hi[i] else v[i] - step[i]
        verts.append(v)
    vals = [eval_at(v) for v in verts]

    for _ in range(max_iter):
        order = np.argsort(vals)
        verts = [verts[i] for i in order]
        vals = [vals[i] for i in order]
        spread = max(np.max(np.abs(verts[1] - verts[0])),
                     np.max(np.abs(verts[2] - verts[0])))
        if spread <= xatol and abs(vals[2] - vals[0]) <= fatol * (1.0 + abs(vals[0])):
            return verts[0], vals[0]
        centroid = 0.5 * (verts[0] + verts[1])
        reflected = centroid + (centroid - verts[2])
        f_r = eval_at(reflected)
        if f_r < vals[0]:
            expanded = centroid + 2.0 * (centroid - verts[2])
            f_e = eval_at(expanded)
            if f_e < f_r:
                verts[2], vals[2] = expanded, f_e
            else:
                verts[2], vals[2] = reflected, f_r
        elif f_r < vals[1]:
            verts[2], vals[2] = reflected, f_r
        else:
            contracted = centroid + 0.5 * (verts[2] - centroid)
            f_c = eval_at(contracted)
            if f_c < vals[2]:
                verts[2], vals[2] = contracted, f_c
            else:
                for i in (1, 2):
                    verts[i] = verts[0] + 0.5 * (verts[i] - verts[0])
                    vals[i] = eval_at(verts[i])
    raise MaxIterations(f"simplex did not converge in {max_iter} iterations")


# ---------------------------------------------------------------------------
# Newton polish on the first-order conditions

def _newton_on_focs(s, x0, box, tol):
    lo = np.array([box[0][0], box[1][0]])
    hi = np.array([box[0][1], box[1][1]])
    x = np.clip(np.array(x0, dtype=float), lo, hi)
    g = np.array(foc_residuals(s, x[0], x[1]))
    for _ in range(_NEWTON_BUDGET):
        if np.max(np.abs(g)) <= tol:
            return x, g
        jac = np.empty((2, 2))
        for j in range(2):
            h = 1e-6 * (1.0 + abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] = min(x[j] + h, hi[j])
            xm[j] = max(x[j] - h, lo[j])
            try:
                gp = np.array(foc_residuals(s, xp[0], xp[1]))
                gm = np.array(foc_residuals(s, xm[0], xm[1]))
            except (NoBracket, DamageCollapse) as exc:
                # the candidate sits against the frontier where the market
                # equilibrium stops existing: not an interior optimum
                raise NoInteriorOptimum(
                    f"first-order conditions undefined next to ({x[0]!r}, {x[1]!r}): {exc}"
                ) from exc
            jac[:, j] = (gp - gm) / (xp[j] - xm[j])
        try:
            delta = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError as exc:
            raise MaxIterations(f"singular Jacobian in Newton polish: {exc}") from exc
        t = 1.0
        g_norm = float(np.dot(g, g))
        for _ in range(12):
            x_try = np.clip(x + t * delta, lo, hi)
            try:
                g_try = np.array(foc_residuals(s, x_try[0], x_try[1]))
            except (NoBracket, DamageCollapse, DomainError):
                t *= 0.5
                continue
            if float(np.dot(g_try, g_try)) < g_norm:
                x, g = x_try, g_try
                break
            t *= 0.5
        else:
            # no descent direction left; report the best point reached
            break
    if np.max(np.abs(g)) <= tol:
        return x, g
    raise MaxIterations(
        f"first-order conditions not reduced below {tol!r}: residuals {tuple(g)!r}"
    )


def _hessian_negdef(fun, x, step=_HESS_STEP):
    h = step
    f_0 = fun(x[0], x[1])
    f_pe = fun(x[0] + h, x[1])
    f_me = fun(x[0] - h, x[1])
    f_pr = fun(x[0], x[1] + h)
    f_mr = fun(x[0], x[1] - h)
    f_pp = fun(x[0] + h, x[1] + h)
    f_pm = fun(x[0] + h, x[1] - h)
    f_mp = fun(x[0] - h, x[1] + h)
    f_mm = fun(x[0] - h, x[1] - h)
    h_ee = (f_pe - 2.0 * f_0 + f_me) / (h * h)
    h_rr = (f_pr - 2.0 * f_0 + f_mr) / (h * h)
    h_er = (f_pp - f_pm - f_mp + f_mm) / (4.0 * h * h)
    return bool(h_ee < 0.0 and h_ee * h_rr - h_er * h_er > 0.0)


def optimize_command_control(s, initial=None):
    """Maximize region A's consumption over (e_a, r).

    Pipeline: 64x64 grid scan for the basin (skipped when ``initial``
    supplies a warm start), simplex descent, then damped Newton on the
    analytic first-order conditions down to tol_opt.  A solution within
    the boundary clamp raises NoInteriorOptimum rather than silently
    reporting a boundary point as interior.
    """
    box = ((_CLAMP, s.e_max - _CLAMP), (_CLAMP, s.e_max - _CLAMP))
    if initial is None:
        x0 = np.array(_grid_scan(s), dtype=float)
    else:
        x0 = np.array(initial, dtype=float)
    x0 = np.clip(x0, [box[0][0], box[1][0]], [box[0][1], box[1][1]])

    def objective(x):
        return -consumption(s, x[0], x[1])

    x_nm, _ = _nelder_mead(objective, x0, box)
    _raise_if_on_boundary(x_nm, box)
    x_star, g = _newton_on_focs(s, x_nm, box, s.tol_opt)
    _raise_if_on_boundary(x_star, box)

    sol = solve_phi(s, x_star[0], x_star[1])
    c_star = _consumption_at(s, x_star[0], x_star[1], sol)
    c_val, _, _ = _c_raw(s.extraction, sol.e_gross)
    pi_r = sol.price * sol.e_gross - c_val

    if s.price_taker:
        p_bar, pi_bar = sol.price, pi_r

        def curvature_fun(e_a, r):
            return _consumption_frozen(s, e_a, r, p_bar, pi_bar)
    else:
        def curvature_fun(e_a, r):
            return consumption(s, e_a, r)

    negdef = _hessian_negdef(curvature_fun, x_star)
    return CommandControlOptimum(
        e_a_star=float(x_star[0]),
        r_star=float(x_star[1]),
        e_w_star=float(sol.e_w),
        c_a_star=float(c_star),
        foc_residual_ea=abs(float(g[0])),
        foc_residual_r=abs(float(g[1])),
        hessian_negdef=negdef,
        pi_r=float(pi_r),
    )


def _raise_if_on_boundary(x, box):
    for value, (lo, hi), name in ((x[0], box[0], "e_a"), (x[1], box[1], "r")):
        if value - lo <= _BOUNDARY_TOL or hi - value <= _BOUNDARY_TOL:
            raise NoInteriorOptimum(
                f"optimal {name} = {float(value)!r} sits on the search boundary"
            )


# ---------------------------------------------------------------------------
# prices

def optimal_prices(s, opt):
    """Carbon tax and removal subsidy decentralizing the planner optimum.

    All quantities are evaluated at the optimum's solved equilibrium.  The
    simplified prices tau_hat / sigma_hat drop the trade-balance term and
    their ratio depends only on the supply-side leakage rate.
    """
    sol = solve_phi(s, opt.e_a_star, opt.r_star)
    rates = rates_at_solution(s, sol)
    f_val, _, _ = _f_raw(s.production, opt.e_a_star)
    _, om_p, _ = scenario_omega(s, sol.e_net)
    marginal_damage = -f_val * om_p
    th = theta(s, opt.e_a_star, sol.e_w)

    tau_star = (1.0 + rates.dphi_dea) * (marginal_damage + th)
    sigma_star = (1.0 + rates.alpha * rates.dphi_dea) * (marginal_damage + th) - th
    tau_hat = (1.0 + rates.dphi_dea) * marginal_damage
    sigma_hat = (1.0 - rates.dphi_dr) * marginal_damage
    wedge_ratio = sigma_hat / tau_hat if tau_hat != 0.0 else math.nan

    balance = s.lam - opt.e_a_star / sol.e_gross
    if abs(balance) <= _BALANCED_CASE_TOL:
        trade_case = "Balanced"
    elif balance > 0.0:
        trade_case = "NetExporter"
    else:
        trade_case = "NetImporter"

    return PolicyPrices(
        tau_star=tau_star,
        sigma_star=sigma_star,
        theta=th,
        tau_hat=tau_hat,
        sigma_hat=sigma_hat,
        wedge_ratio=wedge_ratio,
        gap=tau_star - sigma_star,
        trade_case=trade_case,
        marginal_damage=marginal_damage,
    )


def gap_decomposition(s, opt):
    """The two signed components of tau_star - sigma_star.

    Returns (leakage_term, balance_coefficient, theta).  The first term is
    <= 0 and the coefficient on theta is >= 0 at any interior optimum; the
    gap equals leakage_term + balance_coefficient * theta.
    """
    sol = solve_phi(s, opt.e_a_star, opt.r_star)
    rates = rates_at_solution(s, sol)
    f_val, _, _ = _f_raw(s.production, opt.e_a_star)
    _, om_p, _ = scenario_omega(s, sol.e_net)
    marginal_damage = -f_val * om_p
    th = theta(s, opt.e_a_star, sol.e_w)
    leakage_term = (1.0 - rates.alpha) * rates.dphi_dea * marginal_damage
    balance_coefficient = (1.0 - rates.alpha) * rates.dphi_dea + 1.0
    return leakage_term, balance_coefficient, th


# ---------------------------------------------------------------------------
# decentralized equilibrium under given prices

def decentralized_check(s, tau, sigma):
    """Solve competitive firm behavior in A under a tax/subsidy pair.

    Finds (e_a, r) with F'(e_a)*O(e_net) = c'(E) + tau and h'(r) = sigma,
    the market response being re-solved inside every residual evaluation.
    Removal hits its lower corner when sigma <= h'(0); the corner satisfies
    the firm's optimality condition, so it is accepted with zero removal
    residual.  Uses a damped two-dimensional Newton iteration.
    """
    h1 = s.removal.h1
    corner_r = sigma <= h1
    if corner_r:
        r0 = 0.0
    elif s.removal.h2 > 0.0:
        r0 = (sigma - h1) / s.removal.h2
    else:
        raise NoConvergence(
            f"flat removal cost: h' = {h1!r} can never equal sigma = {sigma!r}"
        )

    def residuals(e_a, r):
        sol = solve_phi(s, e_a, r)
        _, f_p, _ = _f_raw(s.production, e_a)
        om, _, _ = scenario_omega(s, sol.e_net)
        _, h_p = _h_raw(s.removal, r)
        g1 = f_p * om - sol.price - tau
        g2 = 0.0 if (corner_r and r == 0.0 and h_p >= sigma) else h_p - sigma
        return g1, g2, sol.e_w

    # bracket the energy condition to start Newton inside the basin
    e_lo, e_hi = _CLAMP, s.e_max - _CLAMP
    x = np.array([_start_ea(s, r0, tau, e_lo, e_hi), r0])
    g1, g2, e_w = residuals(x[0], x[1])
    g = np.array([g1, g2])
    for it in range(1, _NEWTON_BUDGET + 1):
        if max(abs(g[0]), abs(g[1])) <= s.tol_opt:
            return DecentralizedAllocation(
                e_a=float(x[0]), r=float(x[1]), e_w=e_w,
                residual_energy=abs(float(g[0])),
                residual_removal=abs(float(g[1])),
                iterations=it - 1,
            )
        jac = np.empty((2, 2))
        for j in range(2):
            h = 1e-6 * (1.0 + abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] = x[j] + h
            xm[j] = max(x[j] - h, 0.0)
            if j == 0:
                xp[j] = min(xp[j], e_hi)
            gp = residuals(xp[0], xp[1])
            gm = residuals(xm[0], xm[1])
            denom = xp[j] - xm[j]
            jac[:, j] = ((gp[0] - gm[0]) / denom, (gp[1] - gm[1]) / denom)
        if corner_r:
            jac[1, 1] = 1.0  # removal pinned at the corner
        try:
            delta = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Jacobian: {exc}") from exc
        if abs(x[0] + delta[0]) > 2.0 * s.e_max:
            raise NonPhysical(
                f"iterate e_a = {float(x[0] + delta[0])!r} left [0, e_max]"
            )
        t = 1.0
        g_norm = float(np.dot(g, g))
        for _ in range(12):
            x_try = x + t * delta
            x_try[0] = min(max(x_try[0], e_lo), e_hi)
            x_try[1] = max(x_try[1], 0.0)
            try:
                g1, g2, e_w_try = residuals(x_try[0], x_try[1])
            except (NoBracket, DamageCollapse, DomainError):
                t *= 0.5
                continue
            if g1 * g1 + g2 * g2 < g_norm or t < 1e-3:
                x = x_try
                g = np.array([g1, g2])
                e_w = e_w_try
                break
            t *= 0.5
        else:
            raise NoConvergence("damping failed to reduce the firm-condition residuals")
    raise NoConvergence(
        f"firm conditions above tol_opt after {_NEWTON_BUDGET} iterations: {tuple(g)!r}"
    )


def _start_ea(s, r0, tau, e_lo, e_hi):
    """Coarse scan for a sign change of the energy condition."""
    best, best_val = e_lo, math.inf
    prev_ea, prev_g = None, None
    for e_a in np.linspace(e_lo, e_hi, 33):
        try:
            sol = solve_phi(s, float(e_a), r0)
        except (NoBracket, DamageCollapse):
            continue
        _, f_p, _ = _f_raw(s.production, float(e_a))
        om, _, _ = scenario_omega(s, sol.e_net)
        g1 = f_p * om - sol.price - tau
        if prev_g is not None and (g1 > 0.0) != (prev_g > 0.0):
            return 0.5 * (prev_ea + float(e_a))
        if abs(g1) < best_val:
            best, best_val = float(e_a), abs(g1)
        prev_ea, prev_g = float(e_a), g1
    return best


# ---------------------------------------------------------------------------
# trade-balance cases

def classify_trade_case(s, opt, prices):
    """Classify the optimum's trade-balance case and assert its price order.

    Net exporters must show theta < 0 and tau* < sigma*; the balanced case
    must show theta ~ 0 and tau* < sigma*.  Violations raise
    AssertionFailure (they indicate a solver bug, not a model outcome).
    Importers are reported without assertion, the ordering there being
    genuinely ambiguous.  Flat supply (c'' = 0) degenerates every case to
    theta = 0 with equal prices and is reported as such.
    """
    sol = solve_phi(s, opt.e_a_star, opt.r_star)
    balance = s.lam - opt.e_a_star / sol.e_gross
    th, tau_s, sigma_s = prices.theta, prices.tau_star, prices.sigma_star
    gap = prices.gap

    if s.extraction.c2 == 0.0:
        if abs(th) > 1e-12 or abs(gap) > 1e-10:
            raise AssertionFailure(
                f"flat supply must give theta = 0 and equal prices; "
                f"got theta={th!r}, gap={gap!r}"
            )
        return CaseReport(prices.trade_case, th, tau_s, sigma_s, gap,
                          "flat supply: tax equals subsidy")

    if abs(balance) <= _BALANCED_CASE_TOL:
        if abs(th) > 1e-8:
            raise AssertionFailure(f"balanced trade but theta = {th!r}")
        if not tau_s < sigma_s:
            raise AssertionFailure(
                f"balanced trade requires tau* < sigma*; got {tau_s!r} >= {sigma_s!r}"
            )
        return CaseReport("Balanced", th, tau_s, sigma_s, gap,
                          "leakage wedge only: subsidy exceeds tax")
    if balance > 0.0:
        if not th < 0.0:
            raise AssertionFailure(f"net exporter requires theta < 0; got {th!r}")
        if not tau_s < sigma_s:
            raise AssertionFailure(
                f"net exporter requires tau* < sigma*; got {tau_s!r} >= {sigma_s!r}"
            )
        return CaseReport("NetExporter", th, tau_s, sigma_s, gap,
                          "exporter lowers the tax to prop up the energy price")
    sign = "tau* > sigma*" if gap > 0.0 else "tau* <= sigma*"
    return CaseReport("NetImporter", th, tau_s, sigma_s, gap,
                      f"importer case, ordering ambiguous: {sign}")


def gap_reversal_ownership(s, tol=1e-6, max_iter=60):
    """Ownership share at which the tax/subsidy ordering flips.

    Bisects tau* - sigma* over the ownership share in [0, 1], re-solving
    the optimum at every probe.  Assumes a single sign change on the
    interval without asserting uniqueness; raises NoConvergence when the
    gap keeps one sign across the whole range.
    """
    from .model import replace_param

    warm = {}

    def gap_at(lam):
        sv = replace_param(s, "lambda", lam)
        opt = optimize_command_control(sv, initial=warm.get("x"))
        warm["x"] = (opt.e_a_star, opt.r_star)
        return optimal_prices(sv, opt).gap

    lo, hi = 0.0, 1.0
    g_lo, g_hi = gap_at(lo), gap_at(hi)
    if (g_lo > 0.0) == (g_hi > 0.0):
        raise NoConvergence(
            f"price ordering does not flip on [0, 1]: gaps {g_lo!r}, {g_hi!r}"
        )
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if (gap_at(mid) > 0.0) == (g_lo > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def balanced_scenario(s, theta_tol=1e-10, max_passes=40):
    """Adjust the ownership share until the resource trade balance is zero.

    Iterates lam toward e_a*/E* at the re-solved optimum (secant-
    accelerated).  Returns the adjusted scenario and its optimum.
    """
    from .model import replace_param

    current = s
    opt = optimize_command_control(current)
    lam = opt.e_a_star / (opt.e_a_star + opt.e_w_star)
    prev_lam, prev_f = None, None
    for _ in range(max_passes):
        current = replace_param(s, "lambda", min(max(lam, 0.0), 1.0))
        opt = optimize_command_control(current, initial=(opt.e_a_star, opt.r_star))
        ratio = opt.e_a_star / (opt.e_a_star + opt.e_w_star)
        th = theta(current, opt.e_a_star, opt.e_w_star)
        if abs(th) <= theta_tol:
            return current, opt
        f = lam - ratio
        if prev_f is not None and f != prev_f:
            lam_next = lam - f * (lam - prev_lam) / (f - prev_f)
        else:
            lam_next = ratio
        prev_lam, prev_f = lam, f
        lam = lam_next
    raise NoConvergence(
        f"trade balance not driven below {theta_tol!r} in {max_passes} passes"
    )
