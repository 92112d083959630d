"""Command-line interface.

Subcommands cover the full pipeline: ``generate`` a fleet scenario,
``inner``/``outer`` approximations, ``ratio`` between them, ``disaggregate``
an aggregate profile, the ``peak-demo`` and ``sweep`` studies, the 2D
``oracle2d`` reference, and ``validate`` for sampling-based checks. JSON is
used for structured artifacts and CSV for plot-facing tables; stdout carries
short human-readable summaries only. Exit codes: 0 success, 1 domain or input
error, 2 solver failure.
"""

import argparse
import csv
import json
import sys

import numpy as np

from .disaggregation import disaggregate, disaggregation_report
from .errors import DomainError, SolverFailure
from .ev_model import DEFAULT_CLOCK_ORIGIN, Scenario, sample_scenario
from .experiments import (SWEEP_CSV_COLUMNS, group_disaggregation,
                          heterogeneity_sweep, peak_power_profile)
from .inner_approx import METHODS, TransformResult, solve_inner
from .outer_approx import (DEFAULT_EPSILON, OuterResult, dilate_outer,
                           solve_outer_lp)
from .oracle2d import exact_sum
from .polytope import (battery_to_hpolytope, build_cumulative_matrix,
                       sample_points, volume_ratio)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=1)
        handle.write("\n")


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def _write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _load_scenario(path: str) -> Scenario:
    return Scenario.from_dict(_read_json(path))


def _cmd_generate(args) -> int:
    scenario = sample_scenario(n=args.n, T=args.t, delta=args.delta, sigma=args.sigma,
                               seed=args.seed, homogenize_windows=args.homogenize_windows,
                               clock_origin=args.clock_origin)
    _write_json(args.out, scenario.to_dict())
    print(f"scenario: n={args.n} T={args.t} delta={args.delta} sigma={args.sigma} "
          f"rejections={scenario.rejections} -> {args.out}")
    return 0


def _cmd_inner(args) -> int:
    scenario = _load_scenario(args.scenario)
    result = solve_inner(list(scenario.models), scenario.base, args.method)
    _write_json(args.out, result.to_dict(include_certificates=args.with_certificates))
    print(f"inner[{args.method}]: objective={result.objective!r} -> {args.out}")
    return 0


def _cmd_outer(args) -> int:
    scenario = _load_scenario(args.scenario)
    if args.method == "dilate":
        result = dilate_outer(list(scenario.models), scenario.base)
    else:
        result = solve_outer_lp(list(scenario.models), scenario.base, epsilon=args.epsilon)
    _write_json(args.out, result.to_dict(include_certificates=args.with_certificates))
    print(f"outer[{result.method}]: trace(Z)={float(np.trace(result.Z))!r} -> {args.out}")
    return 0


def _cmd_ratio(args) -> int:
    inner = TransformResult.from_dict(_read_json(args.inner))
    outer = OuterResult.from_dict(_read_json(args.outer))
    print(repr(volume_ratio(inner.map, outer.Q_map)))
    return 0


def _cmd_disaggregate(args) -> int:
    result = TransformResult.from_dict(_read_json(args.result))
    profile = np.asarray(_read_json(args.profile), dtype=float)
    parts = disaggregate(result, profile)
    header = ["ev"] + [f"t{t}" for t in range(parts.shape[1])]
    rows = [[i] + [float(v) for v in part] for i, part in enumerate(parts)]
    _write_csv(args.out, header, rows)
    print(f"disaggregated {parts.shape[0]} profiles -> {args.out}")
    return 0


def _cmd_peak_demo(args) -> int:
    scenario = _load_scenario(args.scenario)
    result = solve_inner(list(scenario.models), scenario.base, "structure")
    profile = peak_power_profile(result)
    arrivals = [p.arrival for p in scenario.params]
    groups = group_disaggregation(result, profile, args.group_size, arrivals=arrivals)
    energy = build_cumulative_matrix(scenario.T, scenario.delta) @ profile
    header = (["period", "aggregate_u", "aggregate_x"]
              + [f"group_{g + 1}" for g in range(groups.shape[0])])
    rows = [[t, float(profile[t]), float(energy[t])]
            + [float(groups[g, t]) for g in range(groups.shape[0])]
            for t in range(scenario.T)]
    _write_csv(args.out, header, rows)
    print(f"peak |u|_inf = {float(np.max(np.abs(profile)))!r} -> {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    sigmas = [float(s) for s in args.sigmas.split(",") if s != ""]
    rows, summary = heterogeneity_sweep(n=args.n, T=args.t, delta=args.delta,
                                        sigmas=sigmas, trials=args.trials,
                                        seed=args.seed, epsilon=args.epsilon,
                                        n_jobs=args.jobs)
    _write_csv(args.out, list(SWEEP_CSV_COLUMNS), [r.as_csv_row() for r in rows])
    for (sigma, method), agg in sorted(summary.items()):
        print(f"sigma={sigma} method={method}: mean_ratio={agg['mean_ratio']:.6f} "
              f"stderr={agg['stderr']:.6f} valid={agg['valid']} failures={agg['failures']}")
    print(f"rows -> {args.out}")
    return 0


def _cmd_oracle2d(args) -> int:
    scenario = _load_scenario(args.scenario)
    if scenario.T != 2:
        raise DomainError(f"oracle2d needs a 2-period scenario, got T={scenario.T}")
    polys = [battery_to_hpolytope(m) for m in scenario.models]
    vertices, area = exact_sum(polys)
    _write_csv(args.out, ["x", "y"], [[float(v[0]), float(v[1])] for v in vertices])
    print(repr(area))
    return 0


def _cmd_validate(args) -> int:
    result = TransformResult.from_dict(_read_json(args.result))
    scenario = _load_scenario(args.scenario)
    points = sample_points(result.base.polytope, args.samples, seed=args.seed)
    aggregate = points @ result.map.T + result.center
    report = disaggregation_report(result, list(scenario.models), aggregate)
    print(f"samples={report['points']} "
          f"max_membership_violation={report['max_membership_violation']!r} "
          f"max_sum_mismatch={report['max_sum_mismatch']!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flexsum",
                                     description="Aggregate-flexibility approximation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a fleet scenario to JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--homogenize-windows", action="store_true")
    p.add_argument("--clock-origin", default=DEFAULT_CLOCK_ORIGIN)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("inner", help="inner approximation of a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--method", choices=METHODS, default="structure")
    p.add_argument("--with-certificates", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_inner)

    p = sub.add_parser("outer", help="outer approximation of a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--method", choices=("dilate", "lp"), default="dilate")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--with-certificates", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_outer)

    p = sub.add_parser("ratio", help="volume ratio |det inner| / |det outer|")
    p.add_argument("--inner", required=True)
    p.add_argument("--outer", required=True)
    p.set_defaults(func=_cmd_ratio)

    p = sub.add_parser("disaggregate", help="split an aggregate profile per EV")
    p.add_argument("--result", required=True)
    p.add_argument("--profile", required=True, help="JSON array of length T")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_disaggregate)

    p = sub.add_parser("peak-demo", help="peak-minimal profile with grouped split")
    p.add_argument("--scenario", required=True)
    p.add_argument("--group-size", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_peak_demo)

    p = sub.add_parser("sweep", help="heterogeneity sweep to CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--sigmas", default="0,0.25,0.5,0.75,1")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("oracle2d", help="exact 2D Minkowski sum of a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_oracle2d)

    p = sub.add_parser("validate", help="sampling-based disaggregation check")
    p.add_argument("--result", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return 1
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except (DomainError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
