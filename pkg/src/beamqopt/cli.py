"""Command-line entry point: ``beamqopt generate | build | solve | verify``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from beamqopt.classical import solve_exact
from beamqopt.errors import CapacityError, ConfigurationError, DomainError
from beamqopt.experiment import QUANTUM_SOLVERS, SOLVERS, QaoaSettings, prepare_scenario, run_solver
from beamqopt.model import check_feasibility, weighted_throughput
from beamqopt.qubo import build_qubo, decode, index_to_bits, load_qubo, minimizers, save_qubo
from beamqopt.quantum.statevector import MixerKind
from beamqopt.scenario import ProfileKind, Scenario, TrafficProfile, generate_scenario

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3
VERIFY_MAX_BITS = 20


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _profile_kind(text: str) -> ProfileKind:
    try:
        return ProfileKind(text.replace("-", "_").lower())
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown profile {text!r}; choose uniform, hotspot or mixed-priority")


def cmd_generate(args: argparse.Namespace) -> int:
    kwargs = {}
    if args.volume_range:
        kwargs["volume_range"] = tuple(args.volume_range)
    if args.rate_range:
        kwargs["rate_range"] = tuple(args.rate_range)
    profile = TrafficProfile(
        kind=args.profile,
        flow_count=args.flows,
        unit_count=args.units,
        beam_count=args.beams,
        slot_count=args.slots,
        hotspot_fraction=args.hot_fraction,
        power_budget_fraction=args.power_fraction,
        correlated_weights=args.correlated,
        dq=args.dq,
        dp=args.dp,
        **kwargs,
    )
    s = generate_scenario(profile, args.seed)
    s.save(args.out)
    print(f"wrote {args.out}: flows={len(s.flows)} units={len(s.units)} slots={len(s.slots)} seed={args.seed}")
    return EXIT_OK


def cmd_build(args: argparse.Namespace) -> int:
    s = prepare_scenario(Scenario.load(args.scenario), args.rescale, args.dq, args.dp)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        q = build_qubo(s, tuple(args.lambdas) if args.lambdas else None, args.queue_scope)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    extra = {"rescale": args.rescale, "scenario": s.to_dict()}
    sidecar = save_qubo(q, args.out, extra)
    counts = q.slack_counts()
    print(f"N = {q.n}")
    print(f"decision bits = {q.index.decision_bits}")
    for slot, nbits in counts["power"]:
        print(f"power slack bits: slot {slot} -> {nbits}")
    for key, nbits in counts["queue"]:
        print(f"queue slack bits: flow {key} -> {nbits}")
    print("lambdas = " + " ".join(format(v, ".12g") for v in q.lambdas))
    print(f"wrote {args.out} and {sidecar}")
    return EXIT_OK


def _load_problem(args: argparse.Namespace):
    q, meta = load_qubo(args.qubo)
    if args.scenario:
        s = prepare_scenario(Scenario.load(args.scenario), meta.get("rescale", 1.0),
                             meta["scenario"]["dq"], meta["scenario"]["dp"])
    else:
        s = Scenario.from_dict(meta["scenario"])
    return s, q


def _solve_one(s, q, solver, settings, out_dir, node_limit):
    return run_solver(s, q, solver, settings, out_dir, node_limit)


def cmd_solve(args: argparse.Namespace) -> int:
    s, q = _load_problem(args)
    out = Path(args.out)
    settings: Optional[QaoaSettings] = None
    if args.solver in QUANTUM_SOLVERS:
        settings = QaoaSettings(
            layers=args.layers,
            iters=args.iters,
            shots=None if args.exact_expectation or args.shots is None else args.shots,
            mixer=args.mixer,
            phis=args.phis,
            seed=args.seed,
            a0=args.a0,
            decay=args.decay,
            gamma_scale=args.gamma_scale,
        )

    if settings is not None and args.repeats > 1:
        jobs = [(replace(settings, seed=settings.seed + r), out / f"seed_{settings.seed + r}") for r in range(args.repeats)]
        with ProcessPoolExecutor(max_workers=min(args.repeats, args.workers)) as pool:
            futures = [pool.submit(_solve_one, s, q, args.solver, st, d, args.node_limit) for st, d in jobs]
            results = [f.result() for f in futures]
    else:
        results = [run_solver(s, q, args.solver, settings, out, args.node_limit)]

    for res in results:
        line = f"solver={res['solver']} objective={res['objective']:.12g} optimal={res['optimal']}"
        if "best_energy_per_depth" in res:
            line += f" seed={res['seed']}"
        print(line)
        for depth, e in enumerate(res.get("best_energy_per_depth", []), 1):
            print(f"  depth {depth}: best energy {e:.12g}")
    print(f"wrote results under {out}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    s, q = _load_problem(args)
    if q.n > VERIFY_MAX_BITS:
        raise CapacityError(f"verify enumerates 2^N states; N={q.n} exceeds the limit of {VERIFY_MAX_BITS}")
    exact = solve_exact(s, queue_sum_scope=q.queue_sum_scope)
    ground, states = minimizers(q)
    problems: List[dict] = []
    for z in states:
        bits = index_to_bits(int(z), q.n)
        sched = decode(q, bits)
        report = check_feasibility(s, sched, q.queue_sum_scope)
        value = weighted_throughput(s, sched)
        if not report.feasible or not math.isclose(value, exact.objective, rel_tol=1e-9, abs_tol=1e-12):
            problems.append({
                "bitstring": "".join(map(str, bits)),
                "schedule": [list(p) for p in sched.sorted_pairs()],
                "throughput": value,
                "feasible": report.feasible,
                "conflict_violations": report.conflict_violations,
                "power_violations": report.power_violations,
                "queue_violations": report.queue_violations,
            })
    ok = not problems and exact.optimal
    print(json.dumps({
        "n": q.n,
        "ground_energy": ground,
        "minimizers": len(states),
        "exact_objective": exact.objective,
        "ok": ok,
        "violations": problems,
    }, indent=2))
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamqopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random scenario JSON file")
    g.add_argument("--profile", type=_profile_kind, default=ProfileKind.UNIFORM)
    g.add_argument("--flows", type=_positive_int, required=True)
    g.add_argument("--units", type=_positive_int, required=True)
    g.add_argument("--beams", type=_positive_int, default=2)
    g.add_argument("--slots", type=_positive_int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dq", type=_positive_float, default=1.0)
    g.add_argument("--dp", type=_positive_float, default=1.0)
    g.add_argument("--volume-range", type=_positive_float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--rate-range", type=_positive_float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--hot-fraction", type=_positive_float, default=0.25)
    g.add_argument("--power-fraction", type=_positive_float, default=0.75)
    g.add_argument("--correlated", action="store_true", help="larger backlogs get larger weights")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("build", help="compile a scenario into a QUBO file plus index sidecar")
    b.add_argument("--scenario", required=True)
    b.add_argument("--rescale", type=_positive_float, default=1.0)
    b.add_argument("--dq", type=_positive_float)
    b.add_argument("--dp", type=_positive_float)
    b.add_argument("--lambdas", type=_positive_float, nargs=3, metavar=("L1", "L2", "L3"))
    b.add_argument("--queue-scope", choices=("all_units", "per_slot"), default="all_units")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build)

    for name, func, text in (("solve", cmd_solve, "run a solver"), ("verify", cmd_verify, "brute-force check a QUBO")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--qubo", required=True)
        p.add_argument("--scenario", help="original scenario; the build's rescale and quanta are re-applied")
        p.set_defaults(func=func)
        if name == "solve":
            p.add_argument("--solver", choices=SOLVERS, required=True)
            p.add_argument("--layers", type=_positive_int, default=1)
            p.add_argument("--iters", type=_positive_int, default=200)
            p.add_argument("--shots", type=_positive_int, nargs="?", const=4096,
                           help="sampled expectation (4096 shots when no count is given)")
            p.add_argument("--exact-expectation", action="store_true", help="statevector expectation (default)")
            p.add_argument("--mixer", choices=[k.value for k in MixerKind], default=MixerKind.TRANSVERSE_X.value)
            p.add_argument("--phis", default="greedy", help="'greedy' or comma-separated radians")
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--a0", type=_positive_float, default=0.5)
            p.add_argument("--decay", type=float, default=0.3)
            p.add_argument("--gamma-scale", type=_positive_float)
            p.add_argument("--repeats", type=_positive_int, default=1)
            p.add_argument("--workers", type=_positive_int, default=4)
            p.add_argument("--node-limit", type=_positive_int, default=10_000_000)
            p.add_argument("--out", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DomainError, ConfigurationError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
