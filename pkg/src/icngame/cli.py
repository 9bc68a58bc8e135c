"""Command-line interface.

Subcommands: ``demand``, ``nash``, ``sweep``, ``br-dynamics`` and
``caching-cost``.  Each accepts ``--config FILE`` (JSON object or
``key = value`` lines, keys named after the long flags); flags given on the
command line override the file.  Tables go to stdout or ``--output`` as
CSV (default) or JSON with 12 significant digits.

Exit status: 0 success, 2 invalid input, 3 model-validity failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .caching import CachingCostModel, PopularityDistribution, cost_of_kappa, f_of_kappa
from .demand import DemandParams, GKind, demand, demand_closed_form, demand_derivative, demand_fixed_point
from .equilibrium import (
    Equilibrium,
    GameSpec,
    Method,
    best_response_dynamics,
    foc_residual,
    nash_concave_closed,
    nash_linear,
    nash_numeric_foc,
    utility_cp,
    utility_isp,
)
from .errors import DomainError, IcnGameError, SidePaymentTooLarge
from .market import SWEEP_FIELDS, Regime, ScenarioConfig, default_kappa_grid, kappa_sweep, optimal_kappa

EXIT_INPUT = 2
EXIT_MODEL = 3

EQ_FIELDS = ("p1", "p2", "p_total", "demand_at_eq", "u1", "u2", "method", "foc_residual", "valid_interior")
DEMAND_FIELDS = ("p", "demand_closed_form", "demand_fixed_point", "derivative")
TRAJ_FIELDS = ("round", "p1", "p2", "u1", "u2")
COST_FIELDS = ("kappa", "f", "cost")


class InputError(Exception):
    """Bad user input; reported with exit status 2."""


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _json_value(value):
    if isinstance(value, bool) or isinstance(value, str) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    x = float(format(float(value), ".12g"))
    return x if math.isfinite(x) else None


def render(rows: list[dict], fields, fmt_name: str, trailer: list[str] | None = None, extra: dict | None = None) -> str:
    if fmt_name == "json":
        records = [{k: _json_value(r[k]) for k in fields} for r in rows]
        if extra:
            doc = {"records": records, **{k: _json_value(v) for k, v in extra.items()}}
            return json.dumps(doc, indent=2) + "\n"
        return json.dumps(records, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow([fmt(r[k]) for k in fields])
    for line in trailer or ():
        buf.write(f"# {line}\n")
    return buf.getvalue()


def read_config(path: str) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InputError(f"{path}: JSON config must be an object")
        return data
    data = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        data[key] = value
    return data


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise InputError(f"not a boolean: {text!r}")


def _pair(text: str) -> tuple[float, float]:
    parts = str(text).split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'p1,p2', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two numbers, got {text!r}") from None


def apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser, defaults: dict) -> None:
    """Fill options not given on the command line from ``--config`` then defaults."""
    actions = {a.dest: a for a in parser._actions if a.dest not in ("help", "config")}
    config = read_config(args.config) if args.config else {}
    for raw_key, value in config.items():
        dest = raw_key.replace("-", "_")
        if dest == "lambda":
            dest = "lambda_"
        if dest not in actions or dest == "command":
            raise InputError(f"unknown config key {raw_key!r}")
        if getattr(args, dest) is not None:
            continue
        action = actions[dest]
        if isinstance(action, argparse._StoreTrueAction):
            setattr(args, dest, _parse_bool(value))
            continue
        conv = action.type or str
        try:
            converted = conv(value if isinstance(value, str) else
                             (",".join(map(str, value)) if isinstance(value, list) else str(value)))
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise InputError(f"config key {raw_key!r}: {exc}") from None
        if action.choices is not None and converted not in action.choices:
            raise InputError(f"config key {raw_key!r}: {converted!r} not in {sorted(action.choices)}")
        setattr(args, dest, converted)
    for dest, value in defaults.items():
        if getattr(args, dest, None) is None:
            setattr(args, dest, value)


def _require(args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise InputError(f"missing required parameter --{name}")


def demand_params(args, with_kappa: bool = True) -> DemandParams:
    _require(args, "dmax", "d")
    kappa = args.kappa if with_kappa else 0.0
    if args.a is not None:
        if args.b is not None:
            raise InputError("give either --a or --b/--lambda, not both")
        return DemandParams.from_a(args.dmax, args.d, args.a, kappa)
    if args.b is None:
        return DemandParams(args.dmax, args.d, kappa=kappa, g_kind=GKind.NONE)
    return DemandParams(args.dmax, args.d, args.b, args.lambda_, kappa, GKind(args.g))


def popularity(args) -> PopularityDistribution:
    if args.popularity_csv:
        return PopularityDistribution.from_csv(args.popularity_csv)
    if args.popularity == "uniform":
        return PopularityDistribution.uniform(args.n_users)
    return PopularityDistribution.truncated_zipf(args.n_users, args.zipf_s)


def game_spec(args) -> GameSpec:
    return GameSpec(demand_params(args), args.ps, args.scale, args.cost)


# -- subcommands -------------------------------------------------------------


def cmd_demand(args) -> str:
    params = demand_params(args)
    if args.grid < 2:
        raise InputError("--grid must be >= 2")
    rows = []
    for p in np.linspace(0.0, params.p_max, args.grid):
        p = float(p)
        closed = demand_closed_form(p, params).value if params.has_closed_form else math.nan
        rows.append({
            "p": p,
            "demand_closed_form": closed,
            "demand_fixed_point": demand_fixed_point(p, params).value,
            "derivative": demand_derivative(p, params),
        })
    return render(rows, DEMAND_FIELDS, args.format)


def _eq_from_dynamics(spec: GameSpec, args) -> Equilibrium:
    init = args.init
    traj = best_response_dynamics(spec, init, args.rounds, tol=args.tol, sequential=args.sequential)
    p1, p2 = traj.final
    p = p1 + p2
    d = demand(p, spec.demand)
    eff = spec.effective_ps
    return Equilibrium(
        p1, p2, p, d, utility_isp(p1, p2, spec), utility_cp(p1, p2, spec),
        Method.BEST_RESPONSE_ITERATION, abs(foc_residual(p, spec.demand)),
        traj.converged and abs(eff) < 0.5 * p,
    )


def cmd_nash(args) -> str:
    spec = game_spec(args)
    if args.method == "linear":
        eq = nash_linear(spec)
    elif args.method == "closed":
        eq = nash_concave_closed(spec)
    elif args.method == "foc":
        eq = nash_numeric_foc(spec)
    else:
        eq = _eq_from_dynamics(spec, args)
    return render([eq.as_dict()], EQ_FIELDS, args.format)


def cmd_sweep(args) -> str:
    regime = Regime(args.regime)
    if args.kgrid < 1:
        raise InputError("--kgrid must be >= 1")
    cost = CachingCostModel(popularity(args), args.gamma) if regime is Regime.ICN else None
    config = ScenarioConfig(regime, demand_params(args, with_kappa=False), args.ps, cost,
                            default_kappa_grid(args.kgrid))
    rows = [r.as_dict() for r in kappa_sweep(config)]
    trailer, extra = [], None
    if args.optimal:
        opt = optimal_kappa(config, args.refine_tol)
        trailer = [f"kappa_star={fmt(opt.kappa_star)} u1={fmt(opt.record.u1)}"]
        extra = {"kappa_star": opt.kappa_star, "u1_star": opt.record.u1}
    return render(rows, SWEEP_FIELDS, args.format, trailer, extra)


def cmd_br_dynamics(args) -> str:
    spec = game_spec(args)
    if args.rounds < 1:
        raise InputError("--rounds must be >= 1")
    pm = spec.demand.p_max
    p1, p2 = args.init
    if not (0 <= p1 <= pm and 0 <= p2 <= pm):
        raise InputError(f"--init prices must lie in [0, {fmt(pm)}]")
    traj = best_response_dynamics(spec, args.init, args.rounds, tol=args.tol, sequential=args.sequential)
    rows = []
    for i, (q1, q2) in enumerate(traj.points):
        if q1 + q2 > pm:
            # simultaneous moves can overshoot p_max; demand is zero there
            u1, u2 = -spec.fixed_cost_isp, 0.0
        else:
            u1, u2 = utility_isp(q1, q2, spec), utility_cp(q1, q2, spec)
        rows.append({"round": i, "p1": q1, "p2": q2, "u1": u1, "u2": u2})
    trailer = [f"converged={fmt(traj.converged)}"]
    extra = {"converged": traj.converged}
    if spec.demand.has_closed_form:
        eq = nash_concave_closed(spec, strict=False)
        q1, q2 = traj.final
        dist = math.hypot(q1 - eq.p1, q2 - eq.p2)
        trailer[0] += f" distance={fmt(dist)}"
        extra["distance"] = dist
    return render(rows, TRAJ_FIELDS, args.format, trailer, extra)


def cmd_caching_cost(args) -> str:
    dist = popularity(args)
    model = CachingCostModel(dist, args.gamma)
    if args.grid < 2:
        raise InputError("--grid must be >= 2")
    rows = []
    for k in np.linspace(0.0, 1.0, args.grid):
        k = float(k)
        rows.append({"kappa": k, "f": f_of_kappa(k, dist), "cost": cost_of_kappa(k, model)})
    return render(rows, COST_FIELDS, args.format)


# -- parser ------------------------------------------------------------------

COMMON_DEFAULTS = {"format": "csv", "output": None, "seed": None}
DEMAND_DEFAULTS = {"lambda_": 0.0, "kappa": 0.0, "g": "linear"}
GAME_DEFAULTS = {"ps": 0.0, "scale": 1.0, "cost": 0.0}
DYN_DEFAULTS = {"init": (0.0, 0.0), "rounds": 200, "tol": 1e-9, "sequential": False}
POP_DEFAULTS = {"popularity": "uniform", "n_users": 100, "zipf_s": 1.0, "popularity_csv": None, "gamma": 1.0}


def _common(p):
    p.add_argument("--config", help="JSON or key=value file; flags override it")
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--output", help="output file (default: stdout)")
    p.add_argument("--seed", type=int, help="accepted for reproducible configs; unused")


def _demand_flags(p, kappa=True):
    p.add_argument("--dmax", type=float, help="demand at zero price")
    p.add_argument("--d", type=float, help="demand sensitivity to price")
    p.add_argument("--b", type=float, help="bandwidth B between CP and ISP")
    p.add_argument("--lambda", dest="lambda_", type=float, help="congestion offset")
    p.add_argument("--a", type=float, help="curvature (1-kappa)/(B-lambda), instead of --b")
    p.add_argument("--g", choices=[k.value for k in GKind], help="congestion factor")
    if kappa:
        p.add_argument("--kappa", type=float, help="caching factor")


def _game_flags(p):
    p.add_argument("--ps", type=float, help="side payment (positive: CP pays ISP)")
    p.add_argument("--scale", type=float, help="multiplier on the side payment")
    p.add_argument("--cost", type=float, help="fixed ISP cost")


def _dyn_flags(p):
    p.add_argument("--init", type=_pair, help="initial prices 'p1,p2'")
    p.add_argument("--rounds", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--sequential", action="store_true", default=None)


def _pop_flags(p):
    p.add_argument("--popularity", choices=["uniform", "zipf"])
    p.add_argument("--n-users", type=int)
    p.add_argument("--zipf-s", type=float)
    p.add_argument("--popularity-csv", help="CSV with header j,pi")
    p.add_argument("--gamma", type=float, help="cost scale")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icngame", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demand", help="demand and its derivative over a price grid")
    _demand_flags(p)
    p.add_argument("--grid", type=int, help="number of prices from 0 to p_max")
    _common(p)
    p.set_defaults(func=cmd_demand, _defaults={**COMMON_DEFAULTS, **DEMAND_DEFAULTS, "grid": 11})

    p = sub.add_parser("nash", help="interior Nash equilibrium")
    _demand_flags(p)
    _game_flags(p)
    p.add_argument("--method", choices=["linear", "closed", "foc", "br-dynamics"])
    _dyn_flags(p)
    _common(p)
    p.set_defaults(func=cmd_nash, _defaults={**COMMON_DEFAULTS, **DEMAND_DEFAULTS, **GAME_DEFAULTS,
                                             **DYN_DEFAULTS, "method": "closed"})

    p = sub.add_parser("sweep", help="equilibria across caching factors")
    _demand_flags(p, kappa=False)
    p.add_argument("--regime", choices=[r.value for r in Regime])
    p.add_argument("--ps", type=float, help="side payment (negative in an ICN)")
    _pop_flags(p)
    p.add_argument("--kgrid", type=int, help="number of kappa points on [0, 1]")
    p.add_argument("--optimal", action="store_true", default=None, help="append the best kappa")
    p.add_argument("--refine-tol", type=float)
    _common(p)
    p.set_defaults(func=cmd_sweep, _defaults={**COMMON_DEFAULTS, **DEMAND_DEFAULTS, **POP_DEFAULTS,
                                              "regime": "icn", "ps": 0.0, "kgrid": 101,
                                              "optimal": False, "refine_tol": 1e-4})

    p = sub.add_parser("br-dynamics", help="best-response iteration trajectory")
    _demand_flags(p)
    _game_flags(p)
    _dyn_flags(p)
    _common(p)
    p.set_defaults(func=cmd_br_dynamics, _defaults={**COMMON_DEFAULTS, **DEMAND_DEFAULTS,
                                                    **GAME_DEFAULTS, **DYN_DEFAULTS})

    p = sub.add_parser("caching-cost", help="caching cost c(kappa) table")
    _pop_flags(p)
    p.add_argument("--grid", type=int)
    _common(p)
    p.set_defaults(func=cmd_caching_cost, _defaults={**COMMON_DEFAULTS, **POP_DEFAULTS, "grid": 11})
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    try:
        apply_config(args, subparser, args._defaults)
        text = args.func(args)
    except SidePaymentTooLarge as exc:
        print(f"icngame {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (InputError, DomainError, ValueError) as exc:
        print(f"icngame {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IcnGameError as exc:
        print(f"icngame {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            print(f"icngame {args.command}: error: cannot write {args.output}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
