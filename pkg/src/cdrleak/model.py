"""Parametric functional forms of the two-region energy/climate economy.

All four primitives are quadratic, which keeps every curvature assumption
checkable through explicit parameter constraints and makes the flat-supply
(c2 = 0) and disabled-damage diagnostic limits exact:

    production   F(e) = fa*e - (fb/2)*e^2        fa > 0, fb > 0
    damages      O(e) = 1 - g1*e - g2*e^2        g1 >= 0, g2 > 0, O(0) = 1
    extraction   c(e) = c1*e + (c2/2)*e^2        c1 >= 0, c2 >= 0
    removal      h(r) = h1*r + (h2/2)*r^2        h1 >= 0, h2 >= 0

The output factor O multiplies production; the fraction 1 - O is destroyed
by climate damages.  O eventually goes negative, so scenarios declare an
emissions cap ``e_max`` inside which all shape assumptions must hold;
``validate_scenario`` checks them on a grid.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DamageCollapse, DomainError


@dataclass(frozen=True)
class ProductionSpec:
    """F(e) = fa*e - (fb/2)*e^2; marginal product positive below e = fa/fb."""

    fa: float
    fb: float


@dataclass(frozen=True)
class DamageSpec:
    """O(e) = 1 - g1*e - g2*e^2; strictly decreasing and concave for g2 > 0."""

    g1: float
    g2: float


@dataclass(frozen=True)
class ExtractionSpec:
    """c(e) = c1*e + (c2/2)*e^2; c2 = 0 is the flat-supply diagnostic case."""

    c1: float
    c2: float


@dataclass(frozen=True)
class RemovalSpec:
    """h(r) = h1*r + (h2/2)*r^2, weakly convex removal cost."""

    h1: float
    h2: float


@dataclass(frozen=True)
class Scenario:
    """Full parametrization of one model economy.

    lam is region A's ownership share of fossil-energy producers, in [0, 1].
    e_max bounds gross world energy use; all shape assumptions must hold on
    [0, e_max], which requires e_max < fa/fb.

    damage_channel_enabled=False replaces the damage factor by O = 1,
    O' = O'' = 0 in equilibrium computations.  This exists solely to check
    the solver against closed forms; it is never used in policy runs.
    price_taker=True makes the policy optimizer treat the world energy
    price and producer surplus as given (their derivatives with respect to
    region A's choices are dropped).
    """

    production: ProductionSpec
    damage: DamageSpec
    extraction: ExtractionSpec
    removal: RemovalSpec
    lam: float
    e_max: float
    tol_root: float = 1e-10
    tol_opt: float = 1e-9
    damage_channel_enabled: bool = True
    price_taker: bool = False


# ---------------------------------------------------------------------------
# evaluation of the functional forms

def _f_raw(p, e):
    """Unguarded (F, F', F'') of the production quadratic."""
    return p.fa * e - 0.5 * p.fb * e * e, p.fa - p.fb * e, -p.fb


def _omega_raw(d, e):
    """Unguarded (O, O', O'') of the damage factor."""
    return 1.0 - d.g1 * e - d.g2 * e * e, -d.g1 - 2.0 * d.g2 * e, -2.0 * d.g2


def _c_raw(x, e):
    """Unguarded (c, c', c'') of the extraction cost."""
    return x.c1 * e + 0.5 * x.c2 * e * e, x.c1 + x.c2 * e, x.c2


def _h_raw(x, r):
    """Unguarded (h, h') of the removal cost; h'' is the constant h2."""
    return x.h1 * r + 0.5 * x.h2 * r * r, x.h1 + x.h2 * r


def production_eval(spec, e):
    """Return (F, F', F'') at energy use e.

    Raises DomainError outside [0, fa/fb): beyond fa/fb the marginal
    product turns negative and the form no longer represents production.
    """
    if e < 0.0 or e >= spec.fa / spec.fb:
        raise DomainError(
            f"energy use {e!r} outside production domain [0, {spec.fa / spec.fb})"
        )
    return _f_raw(spec, e)


def damage_eval(spec, e_net):
    """Return (O, O', O'') at net atmospheric emissions e_net.

    Raises DamageCollapse when O(e_net) <= 0: damages destroyed all output
    and the model assumptions are violated.
    """
    omega, omega_p, omega_pp = _omega_raw(spec, e_net)
    if omega <= 0.0:
        raise DamageCollapse(
            f"damage factor {omega!r} <= 0 at net emissions {e_net!r}"
        )
    return omega, omega_p, omega_pp


def extraction_eval(spec, e):
    """Return (c, c', c'') at extraction level e >= 0."""
    if e < 0.0:
        raise DomainError(f"extraction level {e!r} < 0")
    return _c_raw(spec, e)


def removal_eval(spec, r):
    """Return (h, h') at removal level r >= 0."""
    if r < 0.0:
        raise DomainError(f"removal level {r!r} < 0")
    return _h_raw(spec, r)


def scenario_omega(s, e_net):
    """Effective damage factor (O, O', O'') honoring the diagnostic switch."""
    if not s.damage_channel_enabled:
        return 1.0, 0.0, 0.0
    return _omega_raw(s.damage, e_net)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failing(self):
        return [c for c in self.checks if not c.passed]


_GRID_POINTS = 1000


def validate_scenario(s):
    """Check every shape assumption on a 1000-point grid over [0, e_max].

    Failures are reported, never raised; a scenario is usable only if all
    checks pass.  The damage checks apply to the declared parametrization
    regardless of the diagnostic switch.
    """
    grid = np.linspace(0.0, s.e_max, _GRID_POINTS)
    f_p = s.production.fa - s.production.fb * grid
    om = 1.0 - s.damage.g1 * grid - s.damage.g2 * grid * grid
    om_p = -s.damage.g1 - 2.0 * s.damage.g2 * grid

    checks = [
        ValidationCheck(
            "marginal-product-positive",
            bool(np.all(f_p > 0.0)) and s.e_max < s.production.fa / s.production.fb,
            "F' > 0 on [0, e_max] requires fa > 0 and e_max < fa/fb",
        ),
        ValidationCheck(
            "production-curvature",
            s.production.fb > 0.0,
            "F'' < 0 requires fb > 0",
        ),
        ValidationCheck(
            "damage-positive",
            bool(np.all(om > 0.0)),
            "damage factor must stay positive on [0, e_max]",
        ),
        ValidationCheck(
            "damage-slope",
            bool(np.all(om_p < 0.0)),
            "damage factor must be strictly decreasing on [0, e_max]",
        ),
        ValidationCheck(
            "damage-curvature",
            s.damage.g2 > 0.0,
            "damage factor must be strictly concave: g2 > 0",
        ),
        ValidationCheck(
            "extraction-intercept",
            s.extraction.c1 >= 0.0,
            "marginal extraction cost intercept c1 >= 0",
        ),
        ValidationCheck(
            "extraction-convexity",
            s.extraction.c2 >= 0.0,
            "c'' >= 0 requires c2 >= 0",
        ),
        ValidationCheck(
            "removal-intercept",
            s.removal.h1 >= 0.0,
            "marginal removal cost intercept h1 >= 0",
        ),
        ValidationCheck(
            "removal-convexity",
            s.removal.h2 >= 0.0,
            "h'' >= 0 requires h2 >= 0",
        ),
        ValidationCheck(
            "ownership-share",
            0.0 <= s.lam <= 1.0,
            "ownership share must lie in [0, 1]",
        ),
    ]
    return ValidationReport(tuple(checks))


# ---------------------------------------------------------------------------
# flat parameter view and JSON interface

# canonical flat field order; "lambda" is the wire name of Scenario.lam
_NUMERIC_FIELDS = (
    "fa", "fb", "g1", "g2", "c1", "c2", "h1", "h2",
    "lambda", "e_max", "tol_root", "tol_opt",
)
_BOOL_FIELDS = ("damage_channel_enabled", "price_taker")
_REQUIRED_FIELDS = ("fa", "fb", "g1", "g2", "c1", "c2", "h1", "h2", "lambda", "e_max")

SCENARIO_FIELDS = _NUMERIC_FIELDS + _BOOL_FIELDS


def make_scenario(fa, fb, g1, g2, c1, c2, h1, h2, lam, e_max,
                  tol_root=1e-10, tol_opt=1e-9,
                  damage_channel_enabled=True, price_taker=False):
    """Build a Scenario from flat parameters."""
    return Scenario(
        production=ProductionSpec(fa, fb),
        damage=DamageSpec(g1, g2),
        extraction=ExtractionSpec(c1, c2),
        removal=RemovalSpec(h1, h2),
        lam=lam,
        e_max=e_max,
        tol_root=tol_root,
        tol_opt=tol_opt,
        damage_channel_enabled=damage_channel_enabled,
        price_taker=price_taker,
    )


def scenario_to_dict(s):
    """Flat dict view with wire field names, suitable for JSON."""
    return {
        "fa": s.production.fa, "fb": s.production.fb,
        "g1": s.damage.g1, "g2": s.damage.g2,
        "c1": s.extraction.c1, "c2": s.extraction.c2,
        "h1": s.removal.h1, "h2": s.removal.h2,
        "lambda": s.lam, "e_max": s.e_max,
        "tol_root": s.tol_root, "tol_opt": s.tol_opt,
        "damage_channel_enabled": s.damage_channel_enabled,
        "price_taker": s.price_taker,
    }


def scenario_from_dict(d):
    """Parse a flat scenario mapping; unknown keys are rejected.

    Parsing is strict to catch typos in parameter names: any key outside
    the declared field set raises ConfigError.
    """
    unknown = sorted(set(d) - set(SCENARIO_FIELDS))
    if unknown:
        raise ConfigError(f"unknown scenario field(s): {', '.join(unknown)}")
    missing = [k for k in _REQUIRED_FIELDS if k not in d]
    if missing:
        raise ConfigError(f"missing scenario field(s): {', '.join(missing)}")
    vals = {}
    for k in _NUMERIC_FIELDS:
        if k in d:
            v = d[k]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"scenario field {k!r} must be a number")
            vals[k] = float(v)
    for k in _BOOL_FIELDS:
        if k in d:
            if not isinstance(d[k], bool):
                raise ConfigError(f"scenario field {k!r} must be a boolean")
            vals[k] = d[k]
    vals["lam"] = vals.pop("lambda")
    return make_scenario(**vals)


def load_scenario(path):
    """Load a Scenario from a UTF-8 JSON file (flat object, strict keys)."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    with fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario file {path} must hold a JSON object")
    return scenario_from_dict(raw)


def replace_param(s, name, value):
    """Return a copy of the scenario with one flat field replaced."""
    if name in ("fa", "fb"):
        return replace(s, production=replace(s.production, **{name: value}))
    if name in ("g1", "g2"):
        return replace(s, damage=replace(s.damage, **{name: value}))
    if name in ("c1", "c2"):
        return replace(s, extraction=replace(s.extraction, **{name: value}))
    if name in ("h1", "h2"):
        return replace(s, removal=replace(s.removal, **{name: value}))
    if name == "lambda":
        return replace(s, lam=value)
    if name in ("e_max", "tol_root", "tol_opt"):
        return replace(s, **{name: value})
    raise ConfigError(f"unknown numeric scenario field {name!r}")
