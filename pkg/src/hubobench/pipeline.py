"""Staged solver workflow: warm start, pluggable middle stage, refinement.

A candidate pool (P x N array of spins) flows from stage to stage. Every
stage must hand the incoming incumbent through when it cannot beat it, so the
best energy after each stage never increases; the pipeline checks this and
aborts on violation. Stage wall-clock is measured around each stage call
only; what is left of the total is reported as accounting overhead.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from hubobench import _kernels
from hubobench.core import HuboInstance
from hubobench.solvers import GreedyConfig, MTSConfig, SAConfig, run_mts, run_sa
from hubobench.solvers.base import (
    BestTracker,
    RunResult,
    SolverConfig,
    finish,
    parse_spin_string,
    resolve_seed,
    task_streams,
)
from hubobench.validation import check_instance, check_pool

POOL_CAP = 1024


class ContractViolation(RuntimeError):
    """A stage returned a worse best energy than it was given."""


@dataclass
class StageOutput:
    pool: np.ndarray
    energies: np.ndarray
    result: RunResult


def _pool_energies(instance: HuboInstance, pool: np.ndarray) -> np.ndarray:
    a = instance.arrays
    return np.array([_kernels.energy(a.term_vars, a.coeff, s) for s in pool])


def _pool_result(instance, label, cfg, pool, energies, attempted=0, accepted=0, info=None):
    tracker = BestTracker(instance)
    order = np.argsort(energies, kind="stable")
    tracker.offer(pool[order[0]], 0, float(energies[order[0]]))
    return finish(tracker, label, cfg, attempted, accepted, info)


@dataclass(frozen=True)
class _StageConfig(SolverConfig):
    label: str = ""
    variant = "STAGE"


class Stage:
    """Base class. ``run`` maps (instance, pool or None, seed, budget) to a
    :class:`StageOutput` whose pool contains the incoming incumbent."""

    label = "stage"

    def run(self, instance: HuboInstance, pool: np.ndarray | None, seed: int,
            budget: float | None) -> StageOutput:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.label!r})"


def _with_incumbent(pool_out, energies_out, pool_in, energies_in):
    if pool_in is None:
        return pool_out, energies_out
    i = int(np.argmin(energies_in))
    return (np.vstack([pool_in[i:i + 1], pool_out]),
            np.concatenate([energies_in[i:i + 1], energies_out]))


class AnnealStage(Stage):
    """Simulated-annealing warm start; emits the final state of every restart."""

    def __init__(self, cfg: SAConfig | None = None, label: str = "SA"):
        self.cfg = cfg or SAConfig(n_restarts=32, n_sweeps=200)
        self.label = label

    def run(self, instance, pool, seed, budget):
        cfg = self.cfg if budget is None else self.cfg.replace(time_limit=budget)
        res = run_sa(instance, cfg, seed)
        out = res.pool if res.pool is not None else res.best_config[None, :]
        e = _pool_energies(instance, out)
        if pool is not None:
            e_in = _pool_energies(instance, pool)
            out, e = _with_incumbent(out, e, pool, e_in)
            if e[0] < res.best_energy:
                res = _pool_result(instance, self.label, cfg, out, e,
                                   res.attempted_flips, res.accepted_flips, res.info)
        return StageOutput(out, e, res)


class MTSStage(Stage):
    """Memetic tabu search seeded with the incoming pool."""

    def __init__(self, cfg: MTSConfig | None = None, label: str = "MTS"):
        self.cfg = cfg or MTSConfig(n_generations=200)
        self.label = label

    def run(self, instance, pool, seed, budget):
        cfg = self.cfg if budget is None else self.cfg.replace(time_limit=budget)
        res = run_mts(instance, cfg, seed, initial_population=pool)
        out = res.pool
        e = _pool_energies(instance, out)
        if pool is not None:
            out, e = _with_incumbent(out, e, pool, _pool_energies(instance, pool))
        return StageOutput(out, e, res)


class GreedyStage(Stage):
    """Greedy descent applied to every pool member (or one random start)."""

    def __init__(self, label: str = "greedy"):
        self.label = label

    def run(self, instance, pool, seed, budget):
        a = instance.arrays
        if pool is None:
            rng, _ = task_streams(seed, 0)
            pool = (2 * rng.integers(0, 2, size=(1, instance.n_vars)) - 1).astype(np.int8)
        out = pool.copy()
        moves = 0
        for s in out:
            values = _kernels.term_values(a.term_vars, a.coeff, s)
            moves += _kernels.greedy_descent(a.var_ptr, a.var_terms, a.term_vars, values, s)
        e = _pool_energies(instance, out)
        attempted = (moves + len(out)) * instance.n_vars
        res = _pool_result(instance, self.label, GreedyConfig(), out, e, attempted, moves)
        return StageOutput(out, e, res)


class SurrogateStage(Stage):
    """Stand-in for the quantum middle stage.

    ``identity`` passes the pool through; ``perturb-restart`` emits the
    incumbent plus ``n_copies`` copies with each spin flipped with probability
    ``flip_prob``; ``external-trace`` appends configurations loaded from a
    recorded sample file.
    """

    KINDS = ("identity", "perturb-restart", "external-trace")

    def __init__(self, kind: str = "identity", n_copies: int = 16, flip_prob: float = 0.1,
                 configs=None, label: str | None = None):
        if kind not in self.KINDS:
            raise ValueError(f"unknown surrogate kind {kind!r}; expected one of {self.KINDS}")
        if kind == "external-trace" and configs is None:
            raise ValueError("external-trace surrogate needs configurations")
        self.kind = kind
        self.n_copies = n_copies
        self.flip_prob = flip_prob
        self.configs = None if configs is None else np.asarray(configs, dtype=np.int8)
        self.label = label or f"surrogate:{kind}"

    def run(self, instance, pool, seed, budget):
        cfg = _StageConfig(label=self.label)
        if pool is None:
            rng, _ = task_streams(seed, 0)
            pool = (2 * rng.integers(0, 2, size=(1, instance.n_vars)) - 1).astype(np.int8)
        e_in = _pool_energies(instance, pool)
        if self.kind == "identity":
            out, e = pool, e_in
        elif self.kind == "perturb-restart":
            rng, _ = task_streams(seed, 0)
            inc = pool[int(np.argmin(e_in))]
            flips = rng.random((self.n_copies, instance.n_vars)) < self.flip_prob
            copies = np.where(flips, -inc, inc).astype(np.int8)
            out = np.vstack([inc[None, :], copies])
            e = _pool_energies(instance, out)
        else:
            injected = check_pool(self.configs, instance)
            out = np.vstack([pool, injected])
            e = np.concatenate([e_in, _pool_energies(instance, injected)])
        res = _pool_result(instance, self.label, cfg, out, e)
        return StageOutput(out, e, res)


def surrogate_stage(kind: str, **kwargs) -> SurrogateStage:
    return SurrogateStage(kind, **kwargs)


def load_trace_configs(path, instance: HuboInstance, instance_id: str | None = None) -> np.ndarray:
    """Spin configurations from an external trace file (CSV or JSON lines).

    Rows carry a ``spins`` (or ``best_config``) string of '+'/'-' characters;
    harness result records are read through their ``payload``. Rows without a
    configuration are skipped. ``instance_id`` filters on the ``instance`` (or
    ``instance_id``) column when given.
    """
    path = Path(path)
    rows = []
    if path.suffix == ".csv":
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    else:
        with path.open() as fh:
            for line in fh:
                if line.strip():
                    rows.append(json.loads(line))
    configs = []
    for k, row in enumerate(rows):
        if instance_id is not None and str(row.get("instance", row.get("instance_id"))) != instance_id:
            continue
        payload = row.get("payload") if isinstance(row.get("payload"), dict) else {}
        text = row.get("spins") or row.get("best_config") or payload.get("best_config")
        if not text:
            continue
        spins = parse_spin_string(text.strip())
        if spins.shape[0] != instance.n_vars:
            raise ValueError(
                f"{path}: row {k} has {spins.shape[0]} spins but the instance has N={instance.n_vars}"
            )
        configs.append(spins)
    if not configs:
        raise ValueError(f"{path}: no configurations found")
    return np.stack(configs)


@dataclass
class StageRecord:
    label: str
    best_energy: float
    duration: float
    result: RunResult
    pool_size: int


@dataclass
class PipelineResult:
    stages: list[StageRecord]
    final_config: np.ndarray
    final_energy: float
    total: float
    seed: int
    info: dict = field(default_factory=dict)

    @property
    def stage_energies(self) -> list[float]:
        return [s.best_energy for s in self.stages]

    @property
    def overhead(self) -> float:
        return self.total - sum(s.duration for s in self.stages)

    def to_dict(self) -> dict:
        from hubobench.solvers.base import spin_string

        return {
            "stages": [
                {
                    "label": s.label,
                    "best_energy": s.best_energy,
                    "duration": s.duration,
                    "pool_size": s.pool_size,
                    "result": s.result.to_dict(),
                }
                for s in self.stages
            ],
            "final_config": spin_string(self.final_config),
            "final_energy": self.final_energy,
            "total": self.total,
            "overhead": self.overhead,
            "seed": self.seed,
        }


def stage_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([int(seed) & (2**64 - 1), k]).generate_state(1, np.uint64)[0])


def run_pipeline(
    instance: HuboInstance,
    stages: Sequence[Stage],
    seed=None,
    budgets: Sequence[float | None] | None = None,
    pool_cap: int = POOL_CAP,
) -> PipelineResult:
    """Thread a candidate pool through ``stages`` in order.

    Stage ``k`` receives seed ``stage_seed(seed, k)``, so dropping later
    stages leaves earlier ones bit-identical.
    """
    check_instance(instance)
    if not stages:
        raise ValueError("pipeline needs at least one stage")
    budgets = list(budgets) if budgets is not None else [None] * len(stages)
    if len(budgets) != len(stages):
        raise ValueError(f"{len(budgets)} budgets for {len(stages)} stages")
    for b in budgets:
        if b is not None and not b > 0:
            raise ValueError(f"stage budgets must be positive, got {b!r}")
    seed = resolve_seed(seed)
    seeds = [stage_seed(seed, k) for k in range(len(stages))]
    records: list[StageRecord] = []
    pool = None
    incumbent = np.inf
    clock = time.perf_counter
    t0 = clock()
    for stage, budget, s in zip(stages, budgets, seeds):
        ts = clock()
        out = stage.run(instance, pool, s, budget)
        dt = clock() - ts
        best = out.result.best_energy
        if len(out.pool) == 0:
            raise ContractViolation(f"stage {stage.label!r} returned an empty pool")
        if best > incumbent:
            raise ContractViolation(
                f"stage {stage.label!r} raised the best energy from {incumbent!r} to {best!r}; "
                "stages must pass the incumbent through"
            )
        # best first, so stages that only read a prefix still see the incumbent
        keep = np.argsort(out.energies, kind="stable")[:pool_cap]
        pool = out.pool[keep]
        incumbent = best
        records.append(StageRecord(stage.label, best, dt, out.result, len(pool)))
    total = clock() - t0
    final = records[-1].result
    return PipelineResult(records, final.best_config, final.best_energy, total, seed)


def default_stages(sa: SAConfig | None = None, middle: Stage | None = None,
                   mts: MTSConfig | None = None) -> list[Stage]:
    """SA warm start, surrogate middle stage (identity by default), MTS refinement."""
    return [AnnealStage(sa), middle or SurrogateStage("identity"), MTSStage(mts)]
