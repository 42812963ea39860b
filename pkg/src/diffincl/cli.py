"""Command line front end.

Subcommands ``simulate``, ``analyze``, ``check`` and ``reproduce``.  Exit
status is 0 on success, 1 when a checked criterion fails and 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io, models, plotting
from .chaos import devaney_check, entropy_estimate, omega_report
from .conditions import check_BV3, check_RS1, check_RS2, lemma36_witness
from .core import Branch, Tolerances
from .errors import InclusionError
from .metric import MetricConfig, PairwiseTable
from .path import EnsembleGenerator
from .reproduce import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _point(text: str):
    v = _floats(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError(f"expected two numbers x1,x2, got {text!r}")
    return np.array(v)


def _tolerances(args) -> Tolerances:
    return Tolerances(integ_step=args.tol_step, event_tol=args.tol_event,
                      match_tol=args.tol_match, time_grid=args.tol_grid)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-step", type=float, default=1e-3, help="RK4 step")
    p.add_argument("--tol-event", type=float, default=1e-6, help="event location accuracy")
    p.add_argument("--tol-match", type=float, default=1e-5, help="state matching tolerance")
    p.add_argument("--tol-grid", type=float, default=1e-2, help="time grid of the metric")


def _model(name: str, params_file=None) -> models.ModelSpec:
    params = None
    if params_file is not None:
        if name != "islm-qyml":
            raise UsageError("--params only applies to islm-qyml")
        if not Path(params_file).is_file():
            raise UsageError(f"parameter file {params_file} not found")
        params = models.EconParams.from_json(params_file)
    try:
        return models.get_model(name, params)
    except KeyError:
        raise UsageError(f"unknown model {name!r}; choose from {', '.join(models.MODEL_NAMES)}") from None


def _ensemble(name: str):
    path = Path(name)
    if path.suffix == ".json":
        if not path.is_file():
            raise UsageError(f"ensemble manifest {path} not found")
        return io.read_ensemble(path)
    try:
        return models.get_ensemble(name)
    except KeyError:
        raise UsageError(f"unknown ensemble {name!r}; choose from {', '.join(models.ENSEMBLE_NAMES)} "
                         "or give a manifest .json") from None


def cmd_simulate(args) -> int:
    tol = _tolerances(args)
    spec = _model(args.model, args.params)
    x0 = spec.x0 if args.x0 is None else args.x0
    branch = Branch(args.branch) if args.branch else spec.initial_branch
    sol = spec.simulate(x0, branch, (-args.window, args.window), tol).with_name(args.model)
    out = args.out
    extra = {"model": args.model, "seed": args.seed, "x0": x0, "initial_branch": int(branch), **spec.extra}
    markers = None
    if args.model == "islm-qyml":
        rep = models.detect_cycle_phases(sol)
        io.write_json({"seed": args.seed, **rep.to_json()}, out / "cycle_phases.json")
        markers = [(e["point"], e["kind"]) for e in rep.events]
    io.write_solution(sol, out, "solution", extra)
    plotting.phase_portrait(sol, out / "phase_portrait.svg", spec.region, markers, spec.name)
    print(f"wrote {out / 'solution.json'} ({len(sol.segments)} segments, {len(sol.switch_times)} switches)")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if not (args.entropy or args.omega or args.devaney):
        raise UsageError("choose at least one of --entropy, --omega, --devaney")
    tol = _tolerances(args)
    E = _ensemble(args.ensemble)
    cfg = MetricConfig(grid=tol.time_grid)
    out = args.out
    table = PairwiseTable(E, cfg)
    io.write_matrix(table.matrix(), E.ids, out / "distance_matrix.csv",
                    {"seed": args.seed, "ensemble": E.name, "grid": cfg.grid, "cap": cfg.cap,
                     "trunc_bound": table.trunc_bound, "window": list(E.window)})
    if args.entropy:
        rep = entropy_estimate(E, args.eps, args.s, cfg)
        io.write_json({"seed": args.seed, **rep.to_json()}, out / "entropy.json")
        plotting.spanning_curves(rep, out / "spanning.svg")
        print(f"entropy {rep.label}: {rep.estimate:.6g}")
    if args.omega:
        horizon = args.horizon if args.horizon is not None else 0.5 * min(m.half_width for m in E)
        reps = omega_report(E, horizon, args.omega_eps, cfg, tol)
        io.write_json({"seed": args.seed, "ensemble": E.name,
                       "members": {k: v.to_json() for k, v in reps.items()}}, out / "omega.json")
        print(f"omega: {sum(e.periodic for e in reps.values())}/{len(reps)} members periodic")
    if args.devaney:
        rep = devaney_check(E, cfg, tol=tol, prefer=args.prefer)
        io.write_json({"seed": args.seed, "ensemble": E.name, **rep.to_json()}, out / "devaney.json")
        print(f"devaney: transitive={rep.transitive} periodic_dense={rep.periodic_dense} "
              f"sensitive={rep.sensitive}")
    return EXIT_OK


def _check_setup(args, tol):
    """Region, path generator, inclusion and RS2 candidates of a model."""
    if args.model == "u-segment":
        m = models.make_counterexample_U()
        switch = "auto" if args.restrict_switching == "ensemble" else None
        return m.U, EnsembleGenerator(m.X, switch), m.inc, list(m.rhat.members)
    if args.model == "lens-w":
        m = models.make_counterexample_W()
        switch = "auto" if args.restrict_switching == "ensemble" else None
        return m.W, EnsembleGenerator(m.S, switch), m.inc, list(m.S.members)
    if args.model in ("thm24-spiral", "thm24-axis"):
        inst = models.make_thm24_instance(args.model.split("-")[1])
        return inst.construction(tol).V, inst.generator(tol), inst.inc, None
    if args.model in models.MODEL_NAMES:
        raise UsageError(f"model {args.model!r} has no region to check")
    raise UsageError(f"unknown model {args.model!r}")


def cmd_check(args) -> int:
    if not (args.rs1 or args.rs2 or args.bv3):
        raise UsageError("choose at least one of --rs1, --rs2, --bv3")
    tol = _tolerances(args)
    V, gen, inc, candidates = _check_setup(args, tol)
    reports = []
    if args.rs1:
        reports.append(check_RS1(V, gen, args.n_pairs, args.seed, tol))
    if args.rs2:
        if candidates is None:
            inst = models.make_thm24_instance(args.model.split("-")[1])
            c = inst.construction(tol)
            _, rep = lemma36_witness(c, gen, c.a, c.landing, tol=tol, seed=args.seed)
        else:
            rep = check_RS2(V, candidates, tol, seed=args.seed)
        reports.append(rep)
    if args.bv3:
        reports.append(check_BV3(V, gen, inc, args.n_chains, 4, args.seed, tol))
    failed = []
    for rep in reports:
        doc = rep.to_json()
        doc.update(model=args.model, restrict_switching=args.restrict_switching)
        doc.pop("witness", None)
        io.write_json(doc, args.out / f"{rep.tag.lower()}.json")
        print(f"{rep.tag}: {'pass' if rep.passed else 'FAIL'} ({rep.n_passed}/{rep.n})")
        if not rep.passed:
            failed.append(rep.tag)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_reproduce(args) -> int:
    tol = _tolerances(args)
    results = run_suite(args.suite, args.seed, tol, echo=print)
    io.write_json({"suite": args.suite, "seed": args.seed,
                   "criteria": [{k: v for k, v in r.to_json().items() if k != "runtime"} for r in results]},
                  args.out / f"{args.suite}_report.json")
    # wall-clock times vary between runs, so they live apart from the report
    io.write_json({r.key: r.runtime for r in results}, args.out / f"{args.suite}_timing.json")
    failed = [r.key for r in results if not r.passed]
    if failed:
        print("failing criteria: " + ", ".join(failed))
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffincl", description="Two-branch differential inclusions in the plane.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a switching solution and plot it")
    p.add_argument("--model", required=True)
    p.add_argument("--params", type=Path, help="parameter JSON (islm-qyml)")
    p.add_argument("--x0", type=_point, help="initial state x1,x2 at t = 0")
    p.add_argument("--branch", type=int, choices=(1, 2), help="branch active at t = 0")
    p.add_argument("--window", type=float, default=40.0, help="half-width T of the window [-T, T]")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="entropy, omega-limit and Devaney reports on an ensemble")
    p.add_argument("--ensemble", required=True, help="registry name or manifest .json")
    p.add_argument("--entropy", action="store_true")
    p.add_argument("--omega", action="store_true")
    p.add_argument("--devaney", action="store_true")
    p.add_argument("--eps", type=_floats, default=[0.5, 0.2, 0.1, 0.05], help="entropy scales")
    p.add_argument("--s", type=_floats, default=[1.0, 2.0, 5.0, 10.0], help="entropy horizons")
    p.add_argument("--omega-eps", type=float, default=0.05)
    p.add_argument("--horizon", type=float, help="omega-limit horizon (default half the window)")
    p.add_argument("--prefer", help="member tried first for sensitivity certificates")
    _common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check", help="RS1 / RS2 / BV3 condition reports")
    p.add_argument("--model", required=True)
    p.add_argument("--rs1", action="store_true")
    p.add_argument("--rs2", action="store_true")
    p.add_argument("--bv3", action="store_true")
    p.add_argument("--restrict-switching", choices=("none", "ensemble"), default="none",
                   help="allow switching anywhere, or only where ensemble members switch")
    p.add_argument("--n-pairs", type=int, default=30)
    p.add_argument("--n-chains", type=int, default=20)
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reproduce", help="run an acceptance suite")
    p.add_argument("suite", choices=sorted(SUITES))
    _common(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InclusionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
