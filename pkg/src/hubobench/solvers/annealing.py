"""Simulated annealing with independent restarts."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from hubobench import _kernels
from hubobench.core import HuboInstance
from hubobench.solvers.base import (
    BestTracker,
    RunResult,
    SolverConfig,
    SolverEstimator,
    finish,
    random_spins,
    resolve_seed,
    run_in_pool,
    task_streams,
)
from hubobench.validation import check_instance, check_positive

# uphill acceptance targets for a typical (percentile) move at each end
HOT_ACCEPT = 0.5
COLD_ACCEPT = 0.01


@dataclass(frozen=True)
class TemperatureSchedule:
    t_hot: float
    t_cold: float
    n_steps: int
    interpolation: str = "geometric"

    def __post_init__(self):
        if not (self.t_hot > 0 and self.t_cold > 0):
            raise ValueError("temperatures must be strictly positive")
        if self.t_hot < self.t_cold:
            raise ValueError(f"t_hot ({self.t_hot}) must not be below t_cold ({self.t_cold})")
        if self.interpolation not in ("geometric", "linear"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    def temperatures(self) -> np.ndarray:
        if self.n_steps == 1:
            return np.array([self.t_cold])
        if self.interpolation == "geometric":
            return np.geomspace(self.t_hot, self.t_cold, self.n_steps)
        return np.linspace(self.t_hot, self.t_cold, self.n_steps)

    def betas(self) -> np.ndarray:
        return 1.0 / self.temperatures()


def sample_flip_deltas(instance: HuboInstance, n_samples: int = 64, seed: int = 0) -> np.ndarray:
    """|single-flip delta| of every variable over ``n_samples`` random configurations."""
    a = instance.arrays
    rng = np.random.Generator(np.random.PCG64(seed))
    out = np.empty((n_samples, instance.n_vars))
    for k in range(n_samples):
        spins = random_spins(rng, instance.n_vars)
        values = _kernels.term_values(a.term_vars, a.coeff, spins)
        _kernels.all_deltas(a.var_ptr, a.var_terms, values, out[k])
    return np.abs(out).ravel()


def make_schedule(
    instance: HuboInstance,
    n_steps: int = 1000,
    t_hot: float | None = None,
    t_cold: float | None = None,
    n_samples: int = 64,
    seed: int = 0,
    interpolation: str = "geometric",
) -> TemperatureSchedule:
    """Temperature endpoints from robust percentiles of sampled |delta E|.

    The hot end accepts a 90th-percentile uphill move with probability 1/2,
    the cold end accepts a 10th-percentile move with probability 1/100.
    Percentiles rather than extremes because Cauchy couplings produce a few
    enormous deltas. Explicit endpoints are returned verbatim.
    """
    if instance.n_vars < 1:
        raise ValueError("instance has no variables")
    if t_hot is None or t_cold is None:
        d = sample_flip_deltas(instance, n_samples, seed)
        d = d[d > 0]
        if d.size == 0:
            p90 = p10 = 1.0
        else:
            p90, p10 = np.percentile(d, [90, 10])
        if t_hot is None:
            t_hot = float(p90 / math.log(1.0 / HOT_ACCEPT))
        if t_cold is None:
            t_cold = float(p10 / math.log(1.0 / COLD_ACCEPT))
    return TemperatureSchedule(float(t_hot), float(t_cold), int(n_steps), interpolation)


@dataclass(frozen=True)
class SAConfig(SolverConfig):
    n_restarts: int = 1000
    n_sweeps: int = 1000
    t_hot: float | None = None
    t_cold: float | None = None
    interpolation: str = "geometric"
    n_workers: int = 1
    time_limit: float | None = None
    chunk_sweeps: int | None = None

    variant = "SA"

    def __post_init__(self):
        check_positive("n_restarts", self.n_restarts, integer=True)
        check_positive("n_sweeps", self.n_sweeps, integer=True)
        check_positive("n_workers", self.n_workers, integer=True)
        check_positive("time_limit", self.time_limit, allow_none=True)
        check_positive("chunk_sweeps", self.chunk_sweeps, integer=True, allow_none=True)


def _chunk_size(n_vars: int) -> int:
    # about 2e5 flip proposals between clock reads
    return max(1, 200_000 // max(1, n_vars))


def run_sa(instance: HuboInstance, cfg: SAConfig | None = None, seed=None) -> RunResult:
    """Independent restarts of sequential-sweep Metropolis annealing.

    Restart ``r`` draws its random start and Metropolis variates from streams
    derived from ``(seed, r)``, so results do not depend on ``n_workers``.
    The wall-clock limit is checked between chunks of sweeps.
    """
    cfg = cfg or SAConfig()
    check_instance(instance)
    if instance.n_vars < 1:
        raise ValueError("cannot anneal an instance with zero variables")
    seed = resolve_seed(seed)
    sched = make_schedule(instance, cfg.n_sweeps, cfg.t_hot, cfg.t_cold, seed=seed & 0xFFFFFFFF,
                          interpolation=cfg.interpolation)
    betas = sched.betas()
    a = instance.arrays
    chunk = cfg.chunk_sweeps or _chunk_size(instance.n_vars)
    tracker = BestTracker(instance)
    deadline = None if cfg.time_limit is None else tracker.start + cfg.time_limit

    def restart(r: int):
        if deadline is not None and time.perf_counter() >= deadline:
            return 0, 0, False, None
        rng, kseed = task_streams(seed, r)
        spins = random_spins(rng, instance.n_vars)
        values = _kernels.term_values(a.term_vars, a.coeff, spins)
        deltas = np.empty(instance.n_vars)
        _kernels.all_deltas(a.var_ptr, a.var_terms, values, deltas)
        e0 = float(values.sum())
        state = np.array([e0, e0])
        best_spins = spins.copy()
        counters = np.zeros(2, dtype=np.int64)
        _kernels.seed_rng(kseed)
        done = True
        for lo in range(0, len(betas), chunk):
            _kernels.anneal_sweeps(a.var_ptr, a.var_terms, a.term_vars, values, spins, deltas,
                                   state, best_spins, betas[lo:lo + chunk], counters)
            if state[1] < tracker.energy:
                tracker.offer(best_spins, r)
            tracker.heartbeat()
            if deadline is not None and time.perf_counter() >= deadline and lo + chunk < len(betas):
                done = False
                break
        tracker.offer(best_spins, r)
        return int(counters[0]), int(counters[1]), done, best_spins

    outcomes = run_in_pool(restart, range(cfg.n_restarts), cfg.n_workers)
    attempted = sum(o[0] for o in outcomes)
    accepted = sum(o[1] for o in outcomes)
    info = {
        "t_hot": sched.t_hot,
        "t_cold": sched.t_cold,
        "restarts_completed": sum(1 for o in outcomes if o[2]),
        "seed": seed,
    }
    result = finish(tracker, "SA", cfg, attempted, accepted, info)
    finals = [o[3] for o in outcomes if o[3] is not None]
    if finals:
        pool = np.stack(finals)
        a = instance.arrays
        e = np.array([_kernels.energy(a.term_vars, a.coeff, s) for s in pool])
        result.pool = pool[np.argsort(e, kind="stable")]
    return result


class SimulatedAnnealing(SolverEstimator):
    _config_cls = SAConfig

    def __init__(self, n_restarts=1000, n_sweeps=1000, t_hot=None, t_cold=None,
                 interpolation="geometric", n_workers=1, time_limit=None,
                 chunk_sweeps=None, seed=None):
        self.n_restarts = n_restarts
        self.n_sweeps = n_sweeps
        self.t_hot = t_hot
        self.t_cold = t_cold
        self.interpolation = interpolation
        self.n_workers = n_workers
        self.time_limit = time_limit
        self.chunk_sweeps = chunk_sweeps
        self.seed = seed

    def _run(self, instance, cfg, seed):
        return run_sa(instance, cfg, seed)

