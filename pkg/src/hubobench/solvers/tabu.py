"""Memetic tabu search: a small population evolved by crossover and
mutation, with every child polished by single-flip tabu search."""
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
    task_streams,
)
from hubobench.validation import check_instance, check_pool, check_positive


@dataclass(frozen=True)
class MTSConfig(SolverConfig):
    population_size: int = 10
    n_generations: int = 5000
    tabu_tenure: int | None = None
    tabu_iters: int | None = None
    mutation_rate: float | None = None
    elite_fraction: float = 0.5
    crossover: bool = True
    time_limit: float | None = None

    variant = "MTS"

    def __post_init__(self):
        check_positive("population_size", self.population_size, integer=True)
        if not isinstance(self.n_generations, int) or self.n_generations < 0:
            raise ValueError(f"n_generations must be a non-negative integer, got {self.n_generations!r}")
        if self.crossover and self.population_size < 2:
            raise ValueError("crossover needs a population of at least 2")
        if self.tabu_iters is not None and self.tabu_iters < 0:
            raise ValueError("tabu_iters must be >= 0")
        if self.tabu_tenure is not None and self.tabu_tenure < 0:
            raise ValueError("tabu_tenure must be >= 0")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if not 0 < self.elite_fraction <= 1:
            raise ValueError("elite_fraction must lie in (0, 1]")
        check_positive("time_limit", self.time_limit, allow_none=True)

    def resolved(self, n_vars: int) -> tuple[int, int, float]:
        """(tenure, tabu iterations, mutation rate) with N-dependent defaults."""
        tenure = self.tabu_tenure if self.tabu_tenure is not None else math.ceil(n_vars / 10)
        iters = self.tabu_iters if self.tabu_iters is not None else n_vars
        rate = self.mutation_rate if self.mutation_rate is not None else 1.0 / n_vars
        return tenure, iters, rate


def uniform_crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    take_a = rng.random(a.shape[0]) < 0.5
    return np.where(take_a, a, b).astype(np.int8)


def mutate(spins: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    if rate <= 0:
        return spins.copy()
    flips = rng.random(spins.shape[0]) < rate
    return np.where(flips, -spins, spins).astype(np.int8)


class _Polisher:
    """Tabu search from a start configuration; returns its best visit."""

    def __init__(self, instance: HuboInstance, tenure: int, iters: int):
        self.a = instance.arrays
        self.n = instance.n_vars
        self.tenure = tenure
        self.iters = iters
        self.counters = np.zeros(2, dtype=np.int64)

    def __call__(self, start: np.ndarray, aspiration: float) -> tuple[np.ndarray, float]:
        a = self.a
        spins = start.copy()
        values = _kernels.term_values(a.term_vars, a.coeff, spins)
        e = float(values.sum())
        if self.iters == 0:
            return spins, e
        deltas = np.empty(self.n)
        _kernels.all_deltas(a.var_ptr, a.var_terms, values, deltas)
        state = np.array([e, e])
        best = spins.copy()
        tabu_until = np.zeros(self.n, dtype=np.int64)
        _kernels.tabu_search(a.var_ptr, a.var_terms, a.term_vars, values, spins, deltas, state,
                             best, self.tenure, self.iters, aspiration, tabu_until, self.counters)
        return best, _kernels.energy(a.term_vars, a.coeff, best)


def run_mts(
    instance: HuboInstance,
    cfg: MTSConfig | None = None,
    seed=None,
    initial_population=None,
) -> RunResult:
    """Steady-state memetic search.

    Each generation draws two distinct parents from the elite part of the
    population, combines them by uniform crossover, mutates, polishes the
    child with tabu search (aspiration against the global best) and lets it
    replace the worst member if it is better and not already present.
    """
    cfg = cfg or MTSConfig()
    check_instance(instance)
    seed = resolve_seed(seed)
    n = instance.n_vars
    tenure, iters, rate = cfg.resolved(n)
    rng, _ = task_streams(seed, 0)
    polish = _Polisher(instance, tenure, iters)
    tracker = BestTracker(instance)
    deadline = None if cfg.time_limit is None else tracker.start + cfg.time_limit

    p = cfg.population_size
    if initial_population is not None:
        seeds = check_pool(initial_population, instance)
        starts = [seeds[i % len(seeds)] for i in range(p)]
    else:
        starts = [random_spins(rng, n) for _ in range(p)]
    pop = np.empty((p, n), dtype=np.int8)
    energies = np.empty(p)
    for i, s in enumerate(starts):
        pop[i], energies[i] = polish(s, math.inf if i == 0 else tracker.energy)
        tracker.offer(pop[i], 0, energies[i])

    n_elite = max(2 if cfg.crossover else 1, math.ceil(cfg.elite_fraction * p))
    n_elite = min(n_elite, p)
    replaced = 0
    gens = 0
    for gen in range(cfg.n_generations):
        if deadline is not None and time.perf_counter() >= deadline:
            break
        order = np.argsort(energies, kind="stable")
        elite = order[:n_elite]
        if cfg.crossover:
            i, j = rng.choice(elite, size=2, replace=False)
            child = uniform_crossover(pop[i], pop[j], rng)
        else:
            child = pop[rng.choice(elite)].copy()
        child = mutate(child, rate, rng)
        child, e_child = polish(child, tracker.energy)
        if e_child < tracker.energy:
            tracker.offer(child, 0, e_child)
        worst = order[-1]
        if e_child < energies[worst] and not (pop == child).all(axis=1).any():
            pop[worst] = child
            energies[worst] = e_child
            replaced += 1
        tracker.heartbeat()
        gens += 1
    info = {
        "generations": gens,
        "replacements": replaced,
        "tabu_tenure": tenure,
        "tabu_iters": iters,
        "mutation_rate": rate,
        "population_energies": sorted(float(x) for x in energies),
        "seed": seed,
    }
    result = finish(tracker, "MTS", cfg, polish.counters[0], polish.counters[1], info)
    result.pool = pop[np.argsort(energies, kind="stable")]
    return result


class MemeticTabuSearch(SolverEstimator):
    _config_cls = MTSConfig

    def __init__(self, population_size=10, n_generations=5000, tabu_tenure=None,
                 tabu_iters=None, mutation_rate=None, elite_fraction=0.5,
                 crossover=True, time_limit=None, seed=None):
        self.population_size = population_size
        self.n_generations = n_generations
        self.tabu_tenure = tabu_tenure
        self.tabu_iters = tabu_iters
        self.mutation_rate = mutation_rate
        self.elite_fraction = elite_fraction
        self.crossover = crossover
        self.time_limit = time_limit
        self.seed = seed

    def _run(self, instance, cfg, seed):
        return run_mts(instance, cfg, seed)
