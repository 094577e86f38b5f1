from __future__ import annotations

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
from hubobench.validation import check_instance, check_positive, check_spins


def greedy_descent(instance: HuboInstance, start) -> np.ndarray:
    """Steepest single-flip descent to a 1-flip local optimum.

    Flips the variable with the most negative delta until none is negative;
    ties go to the lowest index.
    """
    spins = check_spins(start, instance)
    a = instance.arrays
    values = _kernels.term_values(a.term_vars, a.coeff, spins)
    _kernels.greedy_descent(a.var_ptr, a.var_terms, a.term_vars, values, spins)
    return spins


@dataclass(frozen=True)
class GreedyConfig(SolverConfig):
    n_starts: int = 1

    variant = "GREEDY"

    def __post_init__(self):
        check_positive("n_starts", self.n_starts, integer=True)


def run_greedy(instance: HuboInstance, cfg: GreedyConfig | None = None, seed=None,
               start=None) -> RunResult:
    """Greedy descent from ``start`` (or from ``n_starts`` random starts)."""
    cfg = cfg or GreedyConfig()
    check_instance(instance)
    seed = resolve_seed(seed)
    rng, _ = task_streams(seed, 0)
    starts = [check_spins(start, instance)] if start is not None else [
        random_spins(rng, instance.n_vars) for _ in range(cfg.n_starts)
    ]
    tracker = BestTracker(instance)
    a = instance.arrays
    moves = 0
    for r, s in enumerate(starts):
        values = _kernels.term_values(a.term_vars, a.coeff, s)
        moves += _kernels.greedy_descent(a.var_ptr, a.var_terms, a.term_vars, values, s)
        tracker.offer(s, r)
    # every move scans all N candidate flips, plus the final optimality scan
    attempted = (moves + len(starts)) * instance.n_vars
    return finish(tracker, "GREEDY", cfg, attempted, moves, {"seed": seed})


class GreedyDescent(SolverEstimator):
    _config_cls = GreedyConfig

    def __init__(self, n_starts=1, seed=None):
        self.n_starts = n_starts
        self.seed = seed

    def _run(self, instance, cfg, seed):
        return run_greedy(instance, cfg, seed)
