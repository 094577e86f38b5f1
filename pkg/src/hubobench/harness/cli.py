"""``hubobench`` command line: gen | solve | bench | import | report.

Errors go to stderr as one JSON object ``{"error": category, "message": ...}``
with a category-specific exit code.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from hubobench.generators import FAMILIES, generate_family
from hubobench.harness.bench import cell_seed, make_record, run_bench, summarize
from hubobench.harness.records import SPEC_NAME, ResultLog, read_records
from hubobench.harness.report import FORMATS, format_text_table, summary_table, write_report
from hubobench.harness.spec import (
    BenchmarkSpec,
    ResolvedInstance,
    SpecError,
    load_spec,
    parse_solver_entry,
    parse_spec,
)
from hubobench.harness.traces import TraceSchemaError, import_trace
from hubobench.io import InstanceFormatError, deserialize_instance, instance_id, serialize_instance
from hubobench.pipeline import ContractViolation

log = logging.getLogger("hubobench")

EXIT_CODES = {"internal": 1, "usage": 2, "input": 3, "io": 4, "contract": 5}


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _solver_entry(args) -> dict:
    if args.config:
        try:
            entry = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"{args.config}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    else:
        entry = {"variant": args.solver, "params": {}}
    if args.solver:
        entry["variant"] = args.solver
    params = dict(entry.get("params", {}))
    for item in args.param or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SpecError(f"--param expects key=value, got {item!r}")
        params[key] = _parse_value(value)
    entry["params"] = params
    return entry


def cmd_gen(args) -> int:
    if args.count < 1:
        raise SpecError(f"--count must be >= 1, got {args.count}")
    out = Path(args.out or f"instances_{args.family}")
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    insts = generate_family(args.family, args.count, seed, args.lattice)
    manifest = {
        "family": args.family,
        "count": args.count,
        "base_seed": seed,
        "lattice": args.lattice,
        "instances": [],
    }
    for inst in insts:
        name = instance_id(inst)
        serialize_instance(inst, out / f"{name}.json")
        manifest["instances"].append({
            "file": f"{name}.json",
            "name": name,
            "seed": inst.metadata["seed"],
            "n_vars": inst.n_vars,
            "n_terms": inst.n_terms,
            "term_counts": {str(k): v for k, v in inst.term_counts().items()},
        })
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(insts)} {args.family} instances to {out}")
    return 0


def cmd_solve(args) -> int:
    inst = deserialize_instance(args.instance)
    entry = parse_solver_entry(_solver_entry(args), "solver")
    iid = instance_id(inst, Path(args.instance).stem)
    ri = ResolvedInstance(iid, inst, args.instance, None)
    seed = cell_seed(args.seed if args.seed is not None else 0, iid, entry.label, args.trial)
    rec = make_record(entry, ri, args.trial, seed, str(Path(args.instance).resolve()),
                      str(Path(args.instance).parent))
    out = Path(args.out or "results")
    ResultLog(out).append(rec)
    p = rec["payload"]
    elapsed = p["elapsed_total"]
    rate = p.get("attempted_flips", 0) / elapsed if elapsed > 0 else 0.0
    print(f"{entry.label} on {iid}: best energy {rec['best_energy']!r}, "
          f"elapsed {elapsed:.4f} s, {rate:.3g} flips/s")
    return 0


def cmd_bench(args) -> int:
    spec = load_spec(args.spec)
    spec = spec.override(seed=args.seed, threads=args.threads, out=args.out)
    out_dir = Path(args.out) if args.out else Path(spec.base_dir, spec.out)
    outcome = run_bench(spec, out_dir)
    if outcome.status == "complete":
        print(f"complete: {outcome.n_total} records in {out_dir}")
    else:
        print(f"ran {outcome.n_new} of {outcome.n_total} cells; results in {out_dir}")
        for label, info in outcome.summary["solvers"].items():
            n = len(info["finite_tts"])
            print(f"  {label}: finite TTS on {n} instance(s){'' if info['all_finite'] else ' (some infinite)'}")
    return 0


def cmd_import(args) -> int:
    instances = {}
    for p in args.instances or []:
        p = Path(p)
        files = sorted(p.glob("*.json")) if p.is_dir() else [p]
        for f in files:
            if f.name in ("manifest.json", SPEC_NAME, "summary.json"):
                continue
            inst = deserialize_instance(f)
            instances[instance_id(inst, f.stem)] = inst
    records = import_trace(args.trace, instances, args.label)
    out = Path(args.out or "results")
    logf = ResultLog(out)
    logf.extend(records)
    flagged = sum(bool(r["flags"]) for r in records)
    unverifiable = sum(r["provenance"] == "imported-unverifiable" for r in records)
    print(f"imported {len(records)} runs into {out} ({flagged} flagged, {unverifiable} unverifiable)")
    if (out / SPEC_NAME).exists():
        spec = parse_spec(json.loads((out / SPEC_NAME).read_text()), ".")
        summarize(out, spec, resolve_or_load(spec, out))
    return 0


def resolve_or_load(spec: BenchmarkSpec, out: Path):
    from hubobench.harness.bench import materialize_instances

    return [ri for ri, _ in materialize_instances(spec, out)]


def cmd_report(args) -> int:
    out = Path(args.results)
    if not read_records(out):
        raise SpecError(f"{out}: no result records")
    path = write_report(out, args.format, args.grid_points)
    if args.format == "summary-table":
        from hubobench.harness.report import load_summary

        print(format_text_table(summary_table(load_summary(out))))
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="global seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads for the benchmark grid")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="hubobench", parents=[common],
                                     description="HUBO instance generation, solving and benchmarking")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate an instance family")
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--lattice", default="heron-156")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", parents=[common], help="run one solver on one instance")
    p.add_argument("instance")
    p.add_argument("--solver", help="SA, PT, MTS, GREEDY or PIPELINE")
    p.add_argument("--config", help="JSON solver entry {variant, params[, stages]}")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="solver parameter override (repeatable)")
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", parents=[common], help="run a benchmark spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("import", parents=[common], help="import an external result trace")
    p.add_argument("trace")
    p.add_argument("--label", help="solver label overriding the trace's solver column")
    p.add_argument("--instances", nargs="*", help="instance files or directories for re-evaluation")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("report", parents=[common], help="emit report files from a results directory")
    p.add_argument("results")
    p.add_argument("--format", required=True, choices=FORMATS)
    p.add_argument("--grid-points", type=int, default=200)
    p.set_defaults(func=cmd_report)
    return parser


def _category(exc: BaseException) -> str:
    if isinstance(exc, CliError):
        return exc.category
    if isinstance(exc, ContractViolation):
        return "contract"
    if isinstance(exc, (SpecError, InstanceFormatError, TraceSchemaError, ValueError, KeyError)):
        return "input"
    if isinstance(exc, OSError):
        return "io"
    return "internal"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name, default in (("seed", None), ("threads", None), ("out", None), ("verbose", 0)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else
                        logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes a categorized exit
        cat = _category(exc)
        if cat == "internal":
            log.debug("internal error", exc_info=True)
        print(json.dumps({"error": cat, "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES[cat]


if __name__ == "__main__":
    sys.exit(main())
