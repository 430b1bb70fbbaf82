"""Command-line interface: gen, solve, payoff, pareto, check.

Exit codes: 0 success, 2 usage error, 3 infeasible, 4 resource limit.
Every run writes a one-line JSON manifest to stderr (and to ``--manifest``
when given).  ``CLSCND_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import __version__
from .bnb import DEFAULT_NODE_LIMIT, NodeLimitReached, solve_single_objective
from .domain import (
    OBJECTIVE_NAMES,
    EchelonSizes,
    InstanceError,
    check_feasibility,
    dumps,
    evaluate_objectives,
    instance_from_dict,
    instance_to_dict,
    mode_usage,
    solution_from_dict,
    solution_to_dict,
)
from .instgen import DEFAULT_MODES, REFERENCE_SIZES, GenConfig, generate
from .milp import build_model, to_lp_text
from .moo import DEFAULT_EPSILON, SIGNS, PayoffInfeasible, pareto_front, payoff_table
from .plot import front_svg

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_LIMIT = 0, 2, 3, 4

log = logging.getLogger("clscnd")


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int | None
    sizes: list | None = None
    version: str = __version__
    wall_time: float = 0.0
    timings: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"manifest": asdict(self)}, sort_keys=True)


def canonical_hash(doc) -> str:
    """sha256 of sorted-key compact JSON; identical on every platform."""
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class _Stages:
    def __init__(self):
        self.start = time.perf_counter()
        self.timings: dict[str, float] = {}
        self._mark = self.start

    def lap(self, name: str):
        now = time.perf_counter()
        self.timings[name] = round(now - self._mark, 6)
        self._mark = now

    def total(self) -> float:
        return round(time.perf_counter() - self.start, 6)


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return value


def _cuts(text: str) -> int:
    value = _positive_int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("cuts must be at least 2")
    return value


def _epsilon(text: str) -> float:
    value = _positive_float(text)
    if not 1e-6 <= value <= 1e-3:
        raise argparse.ArgumentTypeError("epsilon must lie in [1e-6, 1e-3]")
    return value


def _modes(text: str) -> int:
    value = _positive_int(text)
    if value > len(DEFAULT_MODES):
        raise argparse.ArgumentTypeError(f"at most {len(DEFAULT_MODES)} modes are defined")
    return value


def _default_jobs() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# io helpers
# ---------------------------------------------------------------------------


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _load_instance(path: str):
    doc = _read_json(path)
    try:
        inst = instance_from_dict(doc)
    except (InstanceError, ValueError, TypeError) as exc:
        raise UsageError(f"bad instance document: {exc}") from None
    seed = doc.get("generator", {}).get("seed") if isinstance(doc, dict) else None
    return inst, seed, canonical_hash(instance_to_dict(inst))


def _sizes(inst) -> list:
    return list(inst.sizes.tuple())


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text)


def _objective_index(name: str) -> int:
    return OBJECTIVE_NAMES.index(name)


def _fmt(v: float) -> str:
    return f"{v:.6f}"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gen(args, stages):
    sizes = EchelonSizes(args.plants, args.dcs, args.customers, args.recycles, args.disposals, args.modes)
    cfg = GenConfig(seed=args.seed, sizes=sizes, region_side_miles=args.side, inflation_factor=args.inflation)
    inst = generate(cfg)
    stages.lap("generate")
    doc = instance_to_dict(inst)
    doc["generator"] = cfg.to_dict()
    _write(args.out, dumps(doc))
    stages.lap("write")
    return EXIT_OK, RunManifest("gen", canonical_hash({"command": "gen", "config": cfg.to_dict()}), args.seed,
                                list(sizes.tuple()))


def cmd_solve(args, stages):
    inst, seed, ihash = _load_instance(args.instance)
    model = build_model(inst)
    stages.lap("load")
    k = _objective_index(args.objective)
    if args.lp:
        Path(args.lp).write_text(to_lp_text(model, objective=k))
    manifest = RunManifest("solve", canonical_hash({"command": "solve", "instance": ihash,
                                                    "objective": args.objective,
                                                    "node_limit": args.node_limit}), seed, _sizes(inst))
    try:
        res = solve_single_objective(model, k, node_limit=args.node_limit)
    except NodeLimitReached as exc:
        stages.lap("solve")
        print(f"node limit reached after {exc.nodes} nodes; best bound {exc.bound:.6f}", file=sys.stderr)
        if exc.incumbent is not None:
            print(f"incumbent {exc.incumbent.objective:.6f}", file=sys.stderr)
        return EXIT_LIMIT, manifest
    stages.lap("solve")
    if not res.optimal:
        print(f"instance is infeasible ({args.objective} objective)", file=sys.stderr)
        return EXIT_INFEASIBLE, manifest
    sol = res.solution()
    sol = sol.with_objectives(evaluate_objectives(inst, sol))
    usage = mode_usage(inst, sol)
    total = sum(usage.values())
    lines = [f"objective: {args.objective}", "status: optimal"]
    lines += [f"{name}: {_fmt(v)}" for name, v in zip(OBJECTIVE_NAMES, sol.objectives.as_tuple())]
    lines.append(f"nodes: {res.nodes_explored}")
    lines.append("open: " + " ".join(f"{c}={b}" for c, b in sol.open_bits().items()))
    lines.append("positive-flow arcs by mode: " + " ".join(f"{m}={n}" for m, n in usage.items()))
    for mode, n in usage.items():
        if total and n == total:
            lines.append(f"all positive flows use {mode}")
    report = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(dumps(solution_to_dict(sol)))
        sys.stdout.write(report)
    else:
        sys.stderr.write(report)
        sys.stdout.write(dumps(solution_to_dict(sol)))
    stages.lap("write")
    return EXIT_OK, manifest


def _payoff_text(table) -> str:
    labels = [n.capitalize() for n in table.names]
    width = max(16, *(len(x) for x in labels)) + 2
    head = "".ljust(34) + "".join(lab.rjust(width) for lab in labels)
    rows = [head]
    for k, row in enumerate(table.values):
        name = f"Trial {k + 1} (Objective={labels[k]})"
        rows.append(name.ljust(34) + "".join(_fmt(v).rjust(width) for v in row))
    return "\n".join(rows) + "\n"


def cmd_payoff(args, stages):
    inst, seed, ihash = _load_instance(args.instance)
    model = build_model(inst)
    stages.lap("load")
    manifest = RunManifest("payoff", canonical_hash({"command": "payoff", "instance": ihash,
                                                     "lexicographic": not args.no_lex,
                                                     "node_limit": args.node_limit}), seed, _sizes(inst))
    try:
        table = payoff_table(model, lexicographic=not args.no_lex, node_limit=args.node_limit)
    except PayoffInfeasible as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE, manifest
    except NodeLimitReached as exc:
        print(f"node limit reached: {exc}", file=sys.stderr)
        return EXIT_LIMIT, manifest
    stages.lap("payoff")
    sys.stdout.write(_payoff_text(table))
    if args.out:
        Path(args.out).write_text(dumps(table.to_dict()))
    if args.archive:
        Path(args.archive).write_text(dumps({
            "solutions": [{"trial": k + 1, "solution": solution_to_dict(s)}
                          for k, s in enumerate(table.solutions)]
        }))
    stages.lap("write")
    return EXIT_OK, manifest


def cmd_pareto(args, stages):
    inst, seed, ihash = _load_instance(args.instance)
    model = build_model(inst)
    stages.lap("load")
    kept = _objective_index(args.kept)
    config = {"command": "pareto", "instance": ihash, "cuts": args.cuts, "epsilon": args.epsilon,
              "sign": args.sign, "kept": args.kept, "node_limit": args.node_limit}
    manifest = RunManifest("pareto", canonical_hash(config), seed, _sizes(inst))

    def progress(idx, res):
        log.info("cell %d/%d: %s", idx + 1, args.cuts ** 2, res.status)

    try:
        table = payoff_table(model, node_limit=args.node_limit)
        stages.lap("payoff")
        front = pareto_front(model, args.cuts, args.epsilon, kept=kept, sign=args.sign, jobs=args.jobs,
                             node_limit=args.node_limit, payoff=table, progress=progress)
    except PayoffInfeasible as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE, manifest
    except NodeLimitReached as exc:
        print(f"node limit reached in payoff table: {exc}", file=sys.stderr)
        return EXIT_LIMIT, manifest
    stages.lap("grid")
    _write(args.csv, front.to_csv())
    if args.report:
        Path(args.report).write_text(dumps(front.to_report()))
    if args.archive:
        Path(args.archive).write_text(dumps({
            "solutions": [{"cell": c.index, "e": list(c.e), "in_front": c.in_front,
                           "solution": solution_to_dict(c.solution)}
                          for c in front.cells if c.solution is not None]
        }))
    if args.plot:
        Path(args.plot).write_text(front_svg(front))
    stages.lap("write")
    counts = front.counts()
    print("cells: " + " ".join(f"{k}={v}" for k, v in counts.items()), file=sys.stderr)
    if front.partial:
        print("front is partial: some cells hit the node limit", file=sys.stderr)
        return EXIT_LIMIT, manifest
    return EXIT_OK, manifest


def cmd_check(args, stages):
    inst, seed, ihash = _load_instance(args.instance)
    stages.lap("load")
    if (args.solution is None) == (args.archive is None):
        raise UsageError("give exactly one of --solution or --archive")
    if args.solution is not None:
        docs = [("solution", _read_json(args.solution))]
    else:
        archive = _read_json(args.archive)
        try:
            docs = [(f"cell {d.get('cell', d.get('trial', n))}", d["solution"])
                    for n, d in enumerate(archive["solutions"])]
        except (KeyError, TypeError):
            raise UsageError("archive must hold a 'solutions' list of {'solution': ...} entries") from None
    manifest = RunManifest("check", canonical_hash({"command": "check", "instance": ihash,
                                                    "tol": args.tol}), seed, _sizes(inst))
    reports = []
    all_ok = True
    for label, doc in docs:
        try:
            sol = solution_from_dict(doc)
            rep = check_feasibility(inst, sol, args.tol)
        except (KeyError, ValueError, TypeError) as exc:
            raise UsageError(f"{label}: bad solution document: {exc}") from None
        all_ok &= rep.feasible
        reports.append({"label": label, **rep.to_dict()})
        status = "feasible" if rep.feasible else f"{len(rep.violations)} violation(s)"
        print(f"{label}: {status}")
        for v in rep.violations[:20]:
            print(f"  constraint ({v.constraint}) {v.entity}: residual {v.residual:.3g}")
    stages.lap("check")
    if args.out:
        Path(args.out).write_text(dumps({"feasible": all_ok, "reports": reports}))
    return (EXIT_OK if all_ok else EXIT_INFEASIBLE), manifest


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clscnd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"clscnd {__version__}")
    parser.add_argument("--manifest", metavar="PATH", help="also write the run manifest here")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded instance")
    g.add_argument("--seed", type=_nonneg_int, default=0)
    g.add_argument("--out", default="-", help="output path, '-' for stdout (default)")
    g.add_argument("--plants", type=_positive_int, default=REFERENCE_SIZES.plants)
    g.add_argument("--dcs", type=_positive_int, default=REFERENCE_SIZES.dist_centers)
    g.add_argument("--customers", type=_positive_int, default=REFERENCE_SIZES.customers)
    g.add_argument("--recycles", type=_positive_int, default=REFERENCE_SIZES.recycles)
    g.add_argument("--disposals", type=_positive_int, default=REFERENCE_SIZES.disposals)
    g.add_argument("--modes", type=_modes, default=REFERENCE_SIZES.modes)
    g.add_argument("--side", type=_positive_float, default=500.0, help="region side in miles")
    g.add_argument("--inflation", type=_positive_float, default=1.0, help="transport cost multiplier")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="minimise one objective")
    s.add_argument("--instance", default="-", help="instance JSON, '-' for stdin (default)")
    s.add_argument("--objective", choices=OBJECTIVE_NAMES, default="economic")
    s.add_argument("--out", help="solution JSON path (default: stdout, report on stderr)")
    s.add_argument("--node-limit", type=_positive_int, default=DEFAULT_NODE_LIMIT)
    s.add_argument("--lp", metavar="PATH", help="also write the model as LP text")
    s.set_defaults(func=cmd_solve)

    p = sub.add_parser("payoff", help="payoff table of the three single-objective optima")
    p.add_argument("--instance", default="-")
    p.add_argument("--out", help="payoff table JSON path")
    p.add_argument("--archive", help="JSON archive of the three trial solutions")
    p.add_argument("--no-lex", action="store_true", help="skip lexicographic refinement")
    p.add_argument("--node-limit", type=_positive_int, default=DEFAULT_NODE_LIMIT)
    p.set_defaults(func=cmd_payoff)

    f = sub.add_parser("pareto", help="augmented epsilon-constraint front")
    f.add_argument("--instance", default="-")
    f.add_argument("--cuts", type=_cuts, default=10, help="grid points per constrained objective")
    f.add_argument("--epsilon", type=_epsilon, default=DEFAULT_EPSILON)
    f.add_argument("--kept", choices=OBJECTIVE_NAMES, default="economic", help="objective minimised in every cell; the others are bounded")
    f.add_argument("--sign", choices=SIGNS, default="standard", help="augmentation sign convention")
    f.add_argument("--jobs", type=_positive_int, default=_default_jobs())
    f.add_argument("--csv", default="-", help="front CSV path, '-' for stdout (default)")
    f.add_argument("--report", help="run report JSON path")
    f.add_argument("--archive", help="JSON archive of every cell solution")
    f.add_argument("--plot", help="SVG scatter matrix path")
    f.add_argument("--node-limit", type=_positive_int, default=DEFAULT_NODE_LIMIT)
    f.set_defaults(func=cmd_pareto)

    c = sub.add_parser("check", help="audit solutions against every constraint family")
    c.add_argument("--instance", required=True)
    c.add_argument("--solution", help="single solution JSON")
    c.add_argument("--archive", help="archive written by pareto or payoff")
    c.add_argument("--tol", type=_positive_float, default=1e-6)
    c.add_argument("--out", help="feasibility report JSON path")
    c.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("CLSCND_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    stages = _Stages()
    try:
        code, manifest = args.func(args, stages)
    except UsageError as exc:
        print(f"clscnd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = replace(manifest, wall_time=stages.total(), timings=stages.timings)
    line = manifest.to_json()
    print(line, file=sys.stderr)
    if args.manifest:
        Path(args.manifest).write_text(line + "\n")
    return code


if __name__ == "__main__":   # pragma: no cover
    sys.exit(main())
