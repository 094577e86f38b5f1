"""Parallel tempering (replica exchange Monte Carlo).

Plain PT: fixed geometric temperature ladder, sequential Metropolis sweeps
per replica, even/odd adjacent exchanges. Exchanges permute which replica
sits at which temperature; the temperatures themselves never move.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from hubobench import _kernels
from hubobench.core import HuboInstance
from hubobench.solvers.annealing import make_schedule
from hubobench.solvers.base import (
    BestTracker,
    RunResult,
    SolverConfig,
    SolverEstimator,
    finish,
    random_spins,
    resolve_seed,
    task_streams,
)
from hubobench.validation import check_instance, check_positive


def exchange_probability(beta_a: float, beta_b: float, e_a: float, e_b: float) -> float:
    """min(1, exp((beta_a - beta_b) * (E_a - E_b)))."""
    x = (beta_a - beta_b) * (e_a - e_b)
    return 1.0 if x >= 0 else math.exp(x)


def geometric_ladder(t_min: float, t_max: float, n: int) -> np.ndarray:
    if not 0 < t_min <= t_max:
        raise ValueError(f"need 0 < t_min <= t_max, got {t_min}, {t_max}")
    return np.geomspace(t_min, t_max, n)


@dataclass(frozen=True)
class PTConfig(SolverConfig):
    n_replicas: int = 16
    t_min: float | None = None
    t_max: float | None = None
    exchange_interval: int = 1
    time_limit: float | None = 1.0
    n_sweeps: int | None = None
    chunk_sweeps: int | None = None

    variant = "PT"

    def __post_init__(self):
        if not isinstance(self.n_replicas, int) or self.n_replicas < 2:
            raise ValueError(f"parallel tempering needs at least 2 replicas, got {self.n_replicas!r}")
        check_positive("exchange_interval", self.exchange_interval, integer=True)
        check_positive("time_limit", self.time_limit, allow_none=True)
        check_positive("n_sweeps", self.n_sweeps, integer=True, allow_none=True)
        check_positive("chunk_sweeps", self.chunk_sweeps, integer=True, allow_none=True)
        if self.time_limit is None and self.n_sweeps is None:
            raise ValueError("set time_limit, n_sweeps, or both")
        if self.t_min is not None and self.t_max is not None and not 0 < self.t_min < self.t_max:
            raise ValueError("temperatures must satisfy 0 < t_min < t_max")


def run_pt(instance: HuboInstance, cfg: PTConfig | None = None, seed=None) -> RunResult:
    """Run replica exchange until the sweep budget or the wall-clock limit.

    Exchanges happen every ``exchange_interval`` sweeps, alternating even and
    odd adjacent pairs. The limit is checked between chunks of sweeps.
    """
    cfg = cfg or PTConfig()
    check_instance(instance)
    seed = resolve_seed(seed)
    n = instance.n_vars
    k = cfg.n_replicas
    if cfg.t_min is None or cfg.t_max is None:
        sched = make_schedule(instance, 2, seed=seed & 0xFFFFFFFF)
        t_min = cfg.t_min if cfg.t_min is not None else sched.t_cold
        t_max = cfg.t_max if cfg.t_max is not None else sched.t_hot
    else:
        t_min, t_max = cfg.t_min, cfg.t_max
    temps = geometric_ladder(t_min, t_max, k)
    betas = 1.0 / temps

    a = instance.arrays
    rng, kseed = task_streams(seed, 0)
    spins = np.stack([random_spins(rng, n) for _ in range(k)])
    values = np.stack([_kernels.term_values(a.term_vars, a.coeff, s) for s in spins])
    deltas = np.empty((k, n))
    energies = np.empty(k)
    slot_of = np.arange(k, dtype=np.int64)
    counters = np.zeros(2, dtype=np.int64)
    ex_attempt = np.zeros(k - 1, dtype=np.int64)
    ex_accept = np.zeros(k - 1, dtype=np.int64)
    parity = np.zeros(1, dtype=np.int64)

    tracker = BestTracker(instance)
    first = int(np.argmin([v.sum() for v in values]))
    tracker.offer(spins[first], 0)
    best_state = np.array([tracker.energy])
    best_spins = tracker.config.copy()

    chunk = cfg.chunk_sweeps or max(1, 100_000 // (n * k))
    chunk = max(cfg.exchange_interval, chunk - chunk % cfg.exchange_interval)
    deadline = None if cfg.time_limit is None else tracker.start + cfg.time_limit
    _kernels.seed_rng(kseed)
    sweeps = 0
    while True:
        todo = chunk if cfg.n_sweeps is None else min(chunk, cfg.n_sweeps - sweeps)
        if todo <= 0:
            break
        # resynchronise running energies and deltas against accumulated rounding
        for r in range(k):
            energies[r] = values[r].sum()
            _kernels.all_deltas(a.var_ptr, a.var_terms, values[r], deltas[r])
        _kernels.tempering_sweeps(
            a.var_ptr, a.var_terms, a.term_vars, values, spins, deltas, energies, betas,
            slot_of, todo, cfg.exchange_interval, sweeps, best_state, best_spins, counters,
            ex_attempt, ex_accept, parity,
        )
        sweeps += todo
        if best_state[0] < tracker.energy:
            tracker.offer(best_spins, 0)
        best_state[0] = tracker.energy
        tracker.heartbeat()
        if deadline is not None and time.perf_counter() >= deadline:
            break
    with np.errstate(invalid="ignore", divide="ignore"):
        rates = np.where(ex_attempt > 0, ex_accept / np.maximum(ex_attempt, 1), np.nan)
    info = {
        "temperatures": temps.tolist(),
        "exchange_acceptance": [None if np.isnan(x) else float(x) for x in rates],
        "sweeps": sweeps,
        "seed": seed,
    }
    return finish(tracker, "PT", cfg, counters[0], counters[1], info)


class ParallelTempering(SolverEstimator):
    _config_cls = PTConfig

    def __init__(self, n_replicas=16, t_min=None, t_max=None, exchange_interval=1,
                 time_limit=1.0, n_sweeps=None, chunk_sweeps=None, seed=None):
        self.n_replicas = n_replicas
        self.t_min = t_min
        self.t_max = t_max
        self.exchange_interval = exchange_interval
        self.time_limit = time_limit
        self.n_sweeps = n_sweeps
        self.chunk_sweeps = chunk_sweeps
        self.seed = seed

    def _run(self, instance, cfg, seed):
        return run_pt(instance, cfg, seed)
