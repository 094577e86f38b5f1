"""Classical baselines: SA, PT, MTS and greedy descent."""
from hubobench.solvers.annealing import (
    SAConfig,
    SimulatedAnnealing,
    TemperatureSchedule,
    make_schedule,
    run_sa,
)
from hubobench.solvers.base import RunResult, SolverConfig, parse_spin_string, spin_string
from hubobench.solvers.greedy import GreedyConfig, GreedyDescent, greedy_descent, run_greedy
from hubobench.solvers.tabu import MemeticTabuSearch, MTSConfig, run_mts
from hubobench.solvers.tempering import ParallelTempering, PTConfig, exchange_probability, run_pt

CONFIGS = {c.variant: c for c in (SAConfig, PTConfig, MTSConfig, GreedyConfig)}
RUNNERS = {"SA": run_sa, "PT": run_pt, "MTS": run_mts, "GREEDY": run_greedy}


def config_from_dict(d: dict) -> SolverConfig:
    """Build a solver config from ``{"variant": ..., **params}``."""
    d = dict(d)
    variant = str(d.pop("variant", "")).upper()
    if variant not in CONFIGS:
        raise ValueError(f"unknown solver variant {variant!r}; expected one of {sorted(CONFIGS)}")
    try:
        return CONFIGS[variant](**d)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {variant}: {exc}") from None


def run_solver(instance, cfg: SolverConfig, seed=None) -> RunResult:
    return RUNNERS[cfg.variant](instance, cfg, seed)


__all__ = [
    "CONFIGS",
    "GreedyConfig",
    "GreedyDescent",
    "MTSConfig",
    "MemeticTabuSearch",
    "PTConfig",
    "ParallelTempering",
    "RunResult",
    "SAConfig",
    "SimulatedAnnealing",
    "SolverConfig",
    "TemperatureSchedule",
    "config_from_dict",
    "exchange_probability",
    "greedy_descent",
    "make_schedule",
    "parse_spin_string",
    "run_greedy",
    "run_mts",
    "run_pt",
    "run_sa",
    "run_solver",
    "spin_string",
]
