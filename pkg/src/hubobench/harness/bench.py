"""Grid runner: every (instance, solver, trial) cell once, with resumability."""
from __future__ import annotations

import logging
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from hubobench.core import HuboInstance
from hubobench.harness.records import (
    SCHEMA_VERSION,
    SPEC_NAME,
    SUMMARY_NAME,
    ResultLog,
    read_records,
    record_key,
    to_float,
    versions,
    write_json_atomic,
)
from hubobench.harness.spec import BenchmarkSpec, ResolvedInstance, SolverEntry, resolve_instances
from hubobench.io import dumps_instance, serialize_instance
from hubobench.metrics import SuccessCriterion, compute_tts, estimate_p_hit
from hubobench.oracle import brute_force_ground_state
from hubobench.pipeline import (
    AnnealStage,
    GreedyStage,
    MTSStage,
    SurrogateStage,
    load_trace_configs,
    run_pipeline,
)
from hubobench.solvers import config_from_dict, run_solver
from hubobench.solvers.annealing import SAConfig
from hubobench.solvers.tabu import MTSConfig

log = logging.getLogger(__name__)


def cell_seed(seed: int, instance_id: str, label: str, trial: int) -> int:
    """Seed of one grid cell; independent of execution order and worker count."""
    ss = np.random.SeedSequence([
        int(seed) & (2**64 - 1),
        zlib.crc32(instance_id.encode()),
        zlib.crc32(label.encode()),
        int(trial),
    ])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _utc() -> str:
    return datetime.now(timezone.utc).isoformat()


def _stage(st: dict, instance: HuboInstance, iid: str, base_dir: str):
    kind = st["stage"]
    params = dict(st.get("params", {}))
    if kind == "SA":
        return AnnealStage(SAConfig(**params), label=st.get("label", "SA"))
    if kind == "MTS":
        return MTSStage(MTSConfig(**params), label=st.get("label", "MTS"))
    if kind == "GREEDY":
        return GreedyStage(label=st.get("label", "greedy"))
    if kind == "external-trace":
        path = Path(base_dir, params.pop("path"))
        configs = load_trace_configs(path, instance, iid)
        return SurrogateStage(kind, configs=configs, label=st.get("label"), **params)
    return SurrogateStage(kind, label=st.get("label"), **params)


def execute(entry: SolverEntry, instance: HuboInstance, iid: str, seed: int,
            base_dir: str = ".") -> tuple[dict, float, dict]:
    """Run one solver entry; returns (payload, best energy, effective config).

    Only the solver call itself sits inside the timed window.
    """
    if entry.variant == "PIPELINE":
        stages = [_stage(st, instance, iid, base_dir) for st in entry.stages]
        budgets = [st.get("budget") for st in entry.stages]
        res = run_pipeline(instance, stages, seed, budgets)
        payload = res.to_dict()
        payload["kind"] = "pipeline"
        payload["best_energy"] = res.final_energy
        payload["best_config"] = payload["final_config"]
        payload["elapsed_total"] = res.total
        # best-so-far trace on the pipeline clock, for closeness curves
        trace, offset, best = [], 0.0, math.inf
        for s in res.stages:
            for t, e in s.result.trace:
                if e < best:
                    best = e
                    trace.append([offset + t, e])
            offset += s.duration
        payload["trace"] = trace
        return payload, res.final_energy, {"variant": "PIPELINE", "stages": [dict(s) for s in entry.stages]}
    cfg = config_from_dict({"variant": entry.variant, **entry.params})
    res = run_solver(instance, cfg, seed)
    payload = res.to_dict()
    payload["kind"] = "run"
    return payload, res.best_energy, cfg.to_dict()


def make_record(entry: SolverEntry, ri: ResolvedInstance, trial: int, seed: int,
                instance_path: str | None, base_dir: str = ".") -> dict:
    t_cell = time.perf_counter()
    started = _utc()
    t0 = time.perf_counter()
    payload, best, config = execute(entry, ri.instance, ri.id, seed, base_dir)
    wall = time.perf_counter() - t0
    finished = _utc()
    record = {
        "schema_version": SCHEMA_VERSION,
        "instance_id": ri.id,
        "solver": entry.label,
        "trial": trial,
        "seed": seed,
        "provenance": "run",
        "flags": [],
        "instance": {
            "path": instance_path,
            "recipe": ri.recipe,
            "n_vars": ri.instance.n_vars,
            "family": ri.instance.metadata.get("family"),
            "n_terms": ri.instance.n_terms,
        },
        "config": config,
        "payload": payload,
        "best_energy": best,
        "timestamps": {"started": started, "finished": finished, "solver_wall_s": wall},
        "versions": versions(),
    }
    record["overhead"] = {"harness_s": time.perf_counter() - t_cell - wall}
    return record


def materialize_instances(spec: BenchmarkSpec, out_dir: Path) -> list[tuple[ResolvedInstance, str]]:
    """Resolve instances; generated ones are written under ``out_dir/instances``
    so every record points at a file. Paths are stored relative to ``out_dir``."""
    resolved = resolve_instances(spec)
    inst_dir = out_dir / "instances"
    out = []
    for ri in resolved:
        if ri.path is not None:
            out.append((ri, str(Path(spec.base_dir, ri.path).resolve())))
            continue
        inst_dir.mkdir(parents=True, exist_ok=True)
        target = inst_dir / f"{ri.id}.json"
        text = dumps_instance(ri.instance)
        if not target.exists() or target.read_text() != text:
            serialize_instance(ri.instance, target)
        out.append((ri, f"instances/{ri.id}.json"))
    return out


@dataclass
class BenchOutcome:
    status: str  # "complete" when nothing was left to run
    n_new: int
    n_total: int
    out_dir: Path
    summary: dict | None


def run_bench(spec: BenchmarkSpec, out_dir=None, threads: int | None = None) -> BenchOutcome:
    """Run every missing cell of ``spec`` and refresh the summary."""
    out_dir = Path(out_dir if out_dir is not None else Path(spec.base_dir, spec.out))
    threads = threads or spec.threads
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json_atomic(out_dir / SPEC_NAME, spec.to_dict())
    logf = ResultLog(out_dir)
    instances = materialize_instances(spec, out_dir)
    done = logf.completed()
    cells = [
        (entry, ri, path, trial)
        for ri, path in instances
        for entry in spec.solvers
        for trial in range(spec.trials)
        if (ri.id, entry.label, trial) not in done
    ]
    n_total = len(instances) * len(spec.solvers) * spec.trials
    if not cells and (out_dir / SUMMARY_NAME).exists():
        log.info("%s: complete (%d records)", out_dir, n_total)
        return BenchOutcome("complete", 0, n_total, out_dir, None)

    def run_cell(cell):
        entry, ri, path, trial = cell
        return make_record(entry, ri, trial, cell_seed(spec.seed, ri.id, entry.label, trial),
                           path, spec.base_dir)

    # map() yields in submission order, so the log order never depends on
    # which worker finishes first
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for rec in pool.map(run_cell, cells):
                logf.append(rec)
    else:
        for cell in cells:
            logf.append(run_cell(cell))
    summary = summarize(out_dir, spec, [ri for ri, _ in instances])
    return BenchOutcome("ran", len(cells), n_total, out_dir, summary)


def _targets(spec: BenchmarkSpec, records: list[dict], instances) -> dict:
    source = spec.criterion["source"]
    targets = {}
    for ri in instances:
        if source == "oracle":
            gs = brute_force_ground_state(ri.instance)
            targets[ri.id] = {"e_target": gs.energy, "provenance": "oracle", "degeneracy": gs.degeneracy}
        elif source == "explicit":
            values = spec.criterion["values"]
            if ri.id not in values:
                raise ValueError(f"criterion.values has no target for instance {ri.id!r}")
            targets[ri.id] = {"e_target": float(values[ri.id]), "provenance": "explicit"}
        else:
            label = spec.criterion["solver"]
            es = [to_float(r["best_energy"]) for r in records
                  if r["instance_id"] == ri.id and r["solver"] == label]
            if not es:
                raise ValueError(f"no records of solver {label!r} on {ri.id!r} to define the target")
            targets[ri.id] = {"e_target": min(es), "provenance": f"best-of:{label}"}
    return targets


def summarize(out_dir, spec: BenchmarkSpec, instances=None, records=None) -> dict:
    """Targets, hit counts and TTS per (instance, solver) cell, written to
    ``summary.json``."""
    out_dir = Path(out_dir)
    records = read_records(out_dir) if records is None else records
    if instances is None:
        instances = [ri for ri, _ in materialize_instances(spec, out_dir)]
    targets = _targets(spec, records, instances)
    groups: dict[tuple[str, str], list[dict]] = {}
    for r in records:
        groups.setdefault((r["instance_id"], r["solver"]), []).append(r)
    families = {ri.id: ri.instance.metadata.get("family") for ri in instances}
    cells = []
    for (iid, label), recs in sorted(groups.items()):
        if iid not in targets:
            continue
        recs = sorted(recs, key=record_key)
        crit = SuccessCriterion(targets[iid]["e_target"], spec.epsilon, spec.p_target)
        energies = [to_float(r["best_energy"]) for r in recs]
        p, (hits, n) = estimate_p_hit(energies, crit)
        times = [to_float(r["payload"].get("elapsed_total", math.nan)) for r in recs]
        t_run = float(np.mean(times)) if all(t > 0 for t in times) else math.nan
        tts = compute_tts(t_run, p, spec.p_target).tts if t_run == t_run else math.nan
        flips = sum(int(r["payload"].get("attempted_flips", 0)) for r in recs)
        cells.append({
            "instance_id": iid,
            "family": families.get(iid) or recs[0].get("instance", {}).get("family"),
            "solver": label,
            "n_runs": n,
            "n_hits": hits,
            "p_hit": p,
            "t_run": t_run,
            "tts": tts,
            "best_energy": min(energies),
            "throughput": flips / math.fsum(times) if flips and math.fsum(times) > 0 else 0.0,
            "provenance": sorted({r.get("provenance", "run") for r in recs}),
        })
    solvers = sorted({c["solver"] for c in cells})
    finite = {
        s: sorted(c["instance_id"] for c in cells if c["solver"] == s and math.isfinite(c["tts"]))
        for s in solvers
    }
    n_inst = {s: sum(1 for c in cells if c["solver"] == s) for s in solvers}
    summary = {
        "schema_version": SCHEMA_VERSION,
        "criterion": {
            "source": spec.criterion["source"],
            "epsilon": spec.epsilon,
            "p_target": spec.p_target,
        },
        "targets": targets,
        "cells": cells,
        "solvers": {
            s: {"finite_tts": finite[s], "all_finite": len(finite[s]) == n_inst[s]} for s in solvers
        },
    }
    write_json_atomic(out_dir / SUMMARY_NAME, summary)
    return summary
