"""Command-line front end.

Subcommands run the four analysis pipelines and write machine-readable
artifacts; `report` aggregates whatever earlier runs left in the output
directory.  Exit status: 0 all checks pass, 1 a check failed (named on
stderr), 2 configuration error (no artifacts written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import carleman as carleman_mod
from . import counterexample as cx
from . import symbol as symbol_mod
from . import weight as weight_mod
from .errors import ParabolabError
from .modulus import ModulusSpec, classify_osgood, validate_modulus


class ConfigError(Exception):
    pass


def _load_json(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"input file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def parse_mu(arg: str) -> ModulusSpec:
    """`linear`, `power:0.5`, `loglinear[:p]`, or a ModulusSpec JSON path."""
    if arg.endswith(".json"):
        try:
            return ModulusSpec.from_dict(_load_json(arg))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad modulus spec in {arg}: {exc}") from exc
    name, _, param = arg.partition(":")
    try:
        if name == "linear":
            return ModulusSpec.linear()
        if name == "power":
            return ModulusSpec.power(float(param))
        if name == "loglinear":
            return ModulusSpec.loglinear(float(param) if param else 1.0)
    except ValueError as exc:
        raise ConfigError(f"bad modulus argument {arg!r}: {exc}") from exc
    raise ConfigError(f"unknown modulus family {arg!r}")


def _artifact_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _write_json(out_dir: str, name: str, obj: dict) -> str:
    path = _artifact_path(out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _fail(check_name: str) -> int:
    print(f"check failed: {check_name}", file=sys.stderr)
    return 1


def cmd_modulus(args, out_dir: str) -> int:
    spec = parse_mu(args.mu)
    report = validate_modulus(spec)
    verdict = classify_osgood(spec)
    _write_json(out_dir, "modulus_validation.json", report.to_dict())
    _write_json(out_dir, "modulus_verdict.json", verdict.to_dict())
    print(f"modulus {args.mu}: {verdict.classification} "
          f"({verdict.method}); validation "
          f"{'PASS' if report.passed else 'FAIL'}")
    if not report.passed:
        failed = ",".join(c.name for c in report.checks if not c.passed)
        return _fail(f"modulus validation: {failed}")
    return 0


def cmd_weight(args, out_dir: str) -> int:
    spec = parse_mu(args.mu)
    W = weight_mod.build_weight(spec)
    weight_mod.export_csv(W, _artifact_path(out_dir, "weight.csv"))
    report = weight_mod.verify_weight(W)
    _write_json(out_dir, "weight_report.json", report.to_dict())
    blow = "none" if W.blow_up_time is None else f"{W.blow_up_time:.9g}"
    print(f"weight {args.mu}: blow_up_time={blow}, "
          f"max ODE residual {report.max_ode_residual_rel:.3e}, "
          f"{'PASS' if report.passed else 'FAIL'}")
    if not report.passed:
        return _fail("weight verification")
    return 0


def cmd_carleman(args, out_dir: str) -> int:
    if args.coeffs:
        path = symbol_mod.CoefficientPath.from_dict(_load_json(args.coeffs))
    else:
        path = symbol_mod.heat_path()
    spec = parse_mu(args.mu)
    W = weight_mod.build_weight(spec)
    gammas = [float(g) for g in args.gamma_grid.split(",")]
    rng = np.random.default_rng(args.seed)
    usable = W.usable_tau()

    results = []
    all_pass = True
    for gamma in gammas:
        T = min(1.0, 0.9 * usable / gamma)
        profiles = carleman_mod.make_profiles(rng, args.profiles, T / 2.0, n=path.n)
        for prof in profiles:
            res = carleman_mod.decomposition_check(path, W, gamma, prof, T=T,
                                                   pass_tol=args.tol)
            results.append(res.to_dict())
            all_pass = all_pass and res.passed

    T_scan = min(1.0, 0.9 * usable / max(gammas))
    scan_profiles = carleman_mod.make_profiles(rng, args.profiles, T_scan / 2.0,
                                               n=path.n)
    table = carleman_mod.ratio_scan(path, W, scan_profiles, gammas, jobs=args.jobs)
    if args.format == "json":
        _write_json(out_dir, "scan_table.json", table.to_dict())
    else:
        table.to_csv(_artifact_path(out_dir, "scan_table.csv"))
    _write_json(out_dir, "decomposition_results.json", {"results": results})
    worst = max(r["rel_error"] for r in results) if results else 0.0
    print(f"carleman: {len(results)} decomposition checks, worst rel_error "
          f"{worst:.3e}, {'PASS' if all_pass else 'FAIL'}")
    if not all_pass:
        return _fail("decomposition identity")
    return 0


def cmd_counterexample(args, out_dir: str) -> int:
    spec = parse_mu(args.mu)
    cutoffs = cx.build_cutoffs(order=4)
    k0 = args.k0 if args.k0 == "auto" else int(args.k0)
    plan = cx.build_sequences(spec, k0, args.n_max, args.m, cutoffs)
    cond = cx.check_conditions(plan, cutoffs)
    _write_json(out_dir, "condition_report.json",
                {"plan": plan.to_dict(), **cond.to_dict()})

    if not cond.passed:
        # field diagnostics presuppose an admissible plan
        failed = ",".join(r.cond_id for r in cond.results if not r.passed)
        print(f"counterexample mu={args.mu} k0={plan.k0} N={plan.N}: "
              f"conditions FAIL ({failed})")
        return _fail(f"conditions {failed}")

    field = cx.build_field(plan, cutoffs)
    reg = cx.regularity_report(field, sign_variant=args.sign, seed=args.seed)
    _write_json(out_dir, "regularity_report.json", reg.to_dict())

    _dump_grid(field, args, out_dir)
    print(f"counterexample mu={args.mu} k0={plan.k0} N={plan.N}: conditions "
          f"PASS; sharpness "
          f"{'exhibited' if reg.sharpness_exhibited else 'not exhibited'}")
    return 0


def _dump_grid(field: cx.CounterexampleField, args, out_dir: str) -> None:
    rng = np.random.default_rng(args.seed + 1)
    plan = field.plan
    count = args.grid
    bands = rng.integers(1, plan.N + 1, size=count)
    theta = rng.uniform(0.0, 1.0, size=count)
    t = plan.boundaries[bands - 1] + theta * plan.r[bands - 1]
    x1 = rng.uniform(0.0, 2.0 * np.pi, size=count)
    x2 = rng.uniform(0.0, 2.0 * np.pi, size=count)
    sol = field.eval_solution(t, x1, x2, gauged=True)
    low = field.eval_lower_order(t, x1, x2, sign_variant=args.sign)
    log10u = sol.log10_abs_u()
    sign_u = np.sign(sol.u)
    gauged_flag = (np.abs(log10u) > 300.0).astype(int)

    rows = np.column_stack([t, x1, x2, sol.band, log10u, sign_u, low.l,
                            low.b1, low.b2, low.c, gauged_flag])
    header = "t,x1,x2,band,log10_abs_u,sign_u,l,b1,b2,c,gauged"
    if args.format == "json":
        payload = [dict(zip(header.split(","),
                            [float(v) for v in row])) for row in rows]
        _write_json(out_dir, "grid_dump.json", {"rows": payload})
    else:
        with open(_artifact_path(out_dir, "grid_dump.csv"), "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def cmd_report(args, out_dir: str) -> int:
    sections = []
    for name, title in [("modulus_verdict.json", "Osgood classification"),
                        ("modulus_validation.json", "Modulus validation"),
                        ("weight_report.json", "Weight verification"),
                        ("decomposition_results.json", "Carleman decomposition"),
                        ("condition_report.json", "Counterexample conditions"),
                        ("regularity_report.json", "Counterexample regularity")]:
        path = os.path.join(out_dir, name)
        if not os.path.exists(path):
            sections.append(f"## {title}\n(absent)\n")
            continue
        data = _load_json(path)
        summary = _summarize(name, data)
        sections.append(f"## {title}\n{summary}\n")
    text = "# parabolab summary\n\n" + "\n".join(sections)
    out_path = _artifact_path(out_dir, "report.txt")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text)
    return 0


def _summarize(name: str, data: dict) -> str:
    if name == "modulus_verdict.json":
        return f"class: {data['class']} (method: {data['method']})"
    if name == "modulus_validation.json":
        return "passed" if data["passed"] else "FAILED: " + ",".join(
            c["name"] for c in data["checks"] if not c["passed"])
    if name == "weight_report.json":
        return (f"blow_up_time: {data['blow_up_time']}, max ODE residual "
                f"{data['max_ode_residual_rel']:.3e}, dichotomy {data['dichotomy']}")
    if name == "decomposition_results.json":
        res = data["results"]
        if not res:
            return "no cases"
        worst = max(r["rel_error"] for r in res)
        npass = sum(1 for r in res if r["passed"])
        return f"{npass}/{len(res)} identities pass, worst rel_error {worst:.3e}"
    if name == "condition_report.json":
        bad = [c["id"] for c in data["conditions"] if not c["passed"]]
        return "all conditions PASS" if not bad else "FAIL: " + ",".join(bad)
    if name == "regularity_report.json":
        return (f"sharpness exhibited: {data['sharpness_exhibited']} "
                f"({data['levels_used']} dyadic levels); "
                f"band sup trend: {data['sup_trend']}")
    return json.dumps(data)[:200]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="parabolab",
        description="numerical laboratory for parabolic backward uniqueness")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("modulus", "weight", "carleman", "counterexample", "report"):
        p = sub.add_parser(name)
        p.add_argument("--mu", default="linear",
                       help="modulus: linear | power:A | loglinear[:P] | spec.json")
        p.add_argument("--coeffs", default="",
                       help="CoefficientPath JSON (default: heat operator)")
        p.add_argument("--k0", default="auto")
        p.add_argument("--n-max", dest="n_max", type=int, default=50)
        p.add_argument("--m", type=int, default=1)
        p.add_argument("--gamma-grid", dest="gamma_grid", default="1,10,100")
        p.add_argument("--grid", type=int, default=200,
                       help="probe point count for grid dumps")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--sign", choices=("plus_l", "minus_l"), default="plus_l")
        p.add_argument("--out", default="parabolab_out")
        p.add_argument("--format", choices=("json", "csv"), default="csv")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--profiles", type=int, default=5,
                       help="seeded profile count per gamma (carleman)")
    return ap


_COMMANDS = {"modulus": cmd_modulus, "weight": cmd_weight,
             "carleman": cmd_carleman, "counterexample": cmd_counterexample,
             "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # validate inputs up front so config errors leave no artifacts
        if args.command != "report":
            parse_mu(args.mu)
            if args.coeffs:
                symbol_mod.CoefficientPath.from_dict(_load_json(args.coeffs))
            if args.k0 != "auto":
                int(args.k0)
        return _COMMANDS[args.command](args, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ParabolabError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
