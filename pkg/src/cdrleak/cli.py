"""Command-line front end.

Data goes to standard output (or ``--out``) as CSV; a human-readable
summary block goes to standard error, so pipelines can consume the CSV
cleanly.  Exit codes: 0 success, 1 validation/configuration failure,
2 solver error, 3 verification failure.
"""

import argparse
import json
import sys
from dataclasses import dataclass

from . import policy
from .analysis import (
    SweepSpec,
    format_float,
    mc_mb_curves,
    sweep,
    verify_propositions,
)
from .equilibrium import solve_phi
from .errors import AssertionFailure, CdrleakError, ConfigError
from .model import load_scenario, validate_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_VERIFICATION = 3

_CURVE_GRID_POINTS = 101


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario_path: str = None
    sweep_path: str = None
    output_path: str = None
    seed_count: int = 200
    point: tuple = None


def run(config, stdout=None, stderr=None):
    """Execute one command; returns the process exit status."""
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr
    try:
        return _dispatch(config, out, err)
    except ConfigError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_VALIDATION
    except AssertionFailure as exc:
        print(f"verification failure: {exc}", file=err)
        return EXIT_VERIFICATION
    except CdrleakError as exc:
        print(f"solver error ({exc.code}): {exc}", file=err)
        return EXIT_SOLVER


def _dispatch(config, out, err):
    if config.command == "verify":
        return _cmd_verify(config, out, err)
    if config.command not in ("solve", "optimize", "prices", "sweep", "curves"):
        raise ConfigError(f"unknown command {config.command!r}")
    if not config.scenario_path:
        raise ConfigError(f"{config.command} requires a scenario file")

    s = load_scenario(config.scenario_path)
    report = validate_scenario(s)
    if not report.passed:
        for check in report.failing():
            print(f"validation failed: {check.name}: {check.detail}", file=err)
        return EXIT_VALIDATION

    if config.command == "solve":
        return _cmd_solve(config, s, out, err)
    if config.command == "optimize":
        return _cmd_optimize(config, s, out, err, full_prices=False)
    if config.command == "prices":
        return _cmd_optimize(config, s, out, err, full_prices=True)
    if config.command == "sweep":
        return _cmd_sweep(config, s, out, err)
    return _cmd_curves(config, s, out, err)


def _emit(config, text, out):
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


def _summary(err, title, pairs):
    print(title, file=err)
    for name, value in pairs:
        if isinstance(value, str):
            print(f"  {name} = {value}", file=err)
        else:
            print(f"  {name} = {format_float(value)}", file=err)


def _cmd_solve(config, s, out, err):
    e_a, r = config.point if config.point else (0.0, 0.0)
    sol = solve_phi(s, e_a, r)
    header = "e_w,price,residual,iterations,e_gross,e_net"
    row = ",".join((
        format_float(sol.e_w), format_float(sol.price), format_float(sol.residual),
        str(sol.iterations), format_float(sol.e_gross), format_float(sol.e_net),
    ))
    _emit(config, f"{header}\n{row}\n", out)
    _summary(err, f"market response at (e_a={format_float(e_a)}, r={format_float(r)})", [
        ("e_w", sol.e_w),
        ("price", sol.price),
        ("e_gross", sol.e_gross),
        ("e_net", sol.e_net),
        ("iterations", str(sol.iterations)),
    ])
    return EXIT_OK


def _cmd_optimize(config, s, out, err, full_prices):
    opt = policy.optimize_command_control(s)
    prices = policy.optimal_prices(s, opt)
    case = policy.classify_trade_case(s, opt, prices)
    price = solve_phi(s, opt.e_a_star, opt.r_star).price

    if full_prices:
        header = ("tau_star,sigma_star,theta,tau_hat,sigma_hat,"
                  "wedge_ratio,gap,trade_case,marginal_damage")
        row = ",".join((
            format_float(prices.tau_star), format_float(prices.sigma_star),
            format_float(prices.theta), format_float(prices.tau_hat),
            format_float(prices.sigma_hat), format_float(prices.wedge_ratio),
            format_float(prices.gap), prices.trade_case,
            format_float(prices.marginal_damage),
        ))
    else:
        header = ("e_a_star,r_star,e_w_star,c_a_star,foc_residual_ea,"
                  "foc_residual_r,hessian_negdef,pi_r")
        row = ",".join((
            format_float(opt.e_a_star), format_float(opt.r_star),
            format_float(opt.e_w_star), format_float(opt.c_a_star),
            format_float(opt.foc_residual_ea), format_float(opt.foc_residual_r),
            "true" if opt.hessian_negdef else "false", format_float(opt.pi_r),
        ))
    _emit(config, f"{header}\n{row}\n", out)
    _summary(err, "unilateral policy optimum", [
        ("e_a*", opt.e_a_star),
        ("r*", opt.r_star),
        ("e_w*", opt.e_w_star),
        ("c_a*", opt.c_a_star),
        ("price", price),
        ("tau*", prices.tau_star),
        ("sigma*", prices.sigma_star),
        ("theta", prices.theta),
        ("wedge ratio", prices.wedge_ratio),
        ("trade case", case.case),
        ("note", case.detail),
    ])
    return EXIT_OK


def _cmd_sweep(config, s, out, err):
    spec = _load_sweep_spec(config.sweep_path, s)
    table = sweep(spec)
    _emit(config, table.to_csv(), out)
    n_err = sum(
        1 for row in table.rows for cell in row
        if isinstance(cell, str) and cell.startswith("ERR:")
    )
    _summary(err, f"sweep over {spec.parameter}", [
        ("points", str(len(table.rows))),
        ("errors", str(n_err)),
    ])
    return EXIT_OK


def _cmd_curves(config, s, out, err):
    e_a, r = config.point if config.point else (0.0, 0.0)
    span = s.e_max - e_a
    grid = [span * i / (_CURVE_GRID_POINTS - 1) for i in range(_CURVE_GRID_POINTS)]
    table = mc_mb_curves(s, e_a, r, grid)
    _emit(config, table.to_csv(), out)
    crossing = (
        f"[{format_float(table.crossing[0])}, {format_float(table.crossing[1])}]"
        if table.crossing else "none on grid"
    )
    _summary(err, f"marginal cost/benefit curves at (e_a={format_float(e_a)}, "
                  f"r={format_float(r)})", [
        ("points", str(len(table.rows))),
        ("equilibrium bracket", crossing),
    ])
    return EXIT_OK


def _cmd_verify(config, out, err):
    report = verify_propositions(range(config.seed_count))
    _emit(config, report.to_csv(), out)
    err.write(report.summary_text())
    return EXIT_OK if report.passed else EXIT_VERIFICATION


def _load_sweep_spec(path, base):
    if not path:
        raise ConfigError("sweep command requires --sweep <path>")
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read sweep file {path}: {exc}") from exc
    with fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"sweep file {path} must hold a JSON object")
    allowed = {"parameter", "values", "outputs", "point"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown sweep field(s): {', '.join(unknown)}")
    for key in ("parameter", "values", "outputs"):
        if key not in raw:
            raise ConfigError(f"missing sweep field {key!r}")
    if not isinstance(raw["parameter"], str):
        raise ConfigError("sweep field 'parameter' must be a string")
    values = raw["values"]
    if (not isinstance(values, list) or not values
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values)):
        raise ConfigError("sweep field 'values' must be a non-empty list of numbers")
    outputs = raw["outputs"]
    if (not isinstance(outputs, list) or not outputs
            or any(not isinstance(o, str) for o in outputs)):
        raise ConfigError("sweep field 'outputs' must be a non-empty list of names")
    point = None
    if "point" in raw:
        p = raw["point"]
        if (not isinstance(p, list) or len(p) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in p)):
            raise ConfigError("sweep field 'point' must be a [e_a, r] pair")
        point = (float(p[0]), float(p[1]))
    return SweepSpec(
        base=base,
        parameter=raw["parameter"],
        values=tuple(float(v) for v in values),
        outputs=tuple(outputs),
        point=point,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cdrleak",
        description="Two-region carbon-pricing model: solve, optimize, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, metavar="PATH",
                           help="scenario JSON file")
        p.add_argument("--out", metavar="PATH", help="write CSV here instead of stdout")

    p_solve = sub.add_parser("solve", help="solve the market response at one point")
    add_common(p_solve)
    p_solve.add_argument("--ea", type=float, default=0.0, help="region A energy use")
    p_solve.add_argument("--r", type=float, default=0.0, help="region A removal")

    p_opt = sub.add_parser("optimize", help="solve the policy optimum")
    add_common(p_opt)

    p_prices = sub.add_parser("prices", help="optimal tax and subsidy at the optimum")
    add_common(p_prices)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter, emit a CSV table")
    add_common(p_sweep)
    p_sweep.add_argument("--sweep", required=True, metavar="PATH",
                         help="sweep spec JSON file")

    p_verify = sub.add_parser("verify", help="run the invariant suite over seeds")
    p_verify.add_argument("--seeds", type=int, default=200, metavar="N",
                          help="number of seeded scenarios (seeds 0..N-1)")
    p_verify.add_argument("--out", metavar="PATH",
                          help="write CSV here instead of stdout")

    p_curves = sub.add_parser("curves", help="marginal cost/benefit curve data")
    add_common(p_curves)
    p_curves.add_argument("--ea", type=float, default=0.0, help="region A energy use")
    p_curves.add_argument("--r", type=float, default=0.0, help="region A removal")

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    point = None
    if args.command in ("solve", "curves"):
        point = (args.ea, args.r)
    config = RunConfig(
        command=args.command,
        scenario_path=getattr(args, "scenario", None),
        sweep_path=getattr(args, "sweep", None),
        output_path=getattr(args, "out", None),
        seed_count=getattr(args, "seeds", 200),
        point=point,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
