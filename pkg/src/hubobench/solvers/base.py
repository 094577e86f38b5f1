from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import threading
import time
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from hubobench.core import HuboInstance, evaluate_energy
from hubobench.validation import check_instance

HEARTBEAT = 0.010


@dataclass
class RunResult:
    """Outcome of one solver execution.

    ``trace`` holds (elapsed seconds, best-so-far energy) pairs with strictly
    increasing times and non-increasing energies; its last energy equals
    ``best_energy``, which is always an exact re-evaluation of ``best_config``.
    """

    solver: str
    best_energy: float
    best_config: np.ndarray
    trace: list[tuple[float, float]]
    attempted_flips: int
    accepted_flips: int
    elapsed_total: float
    config_hash: str = ""
    config: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    # final configurations of independent restarts / population, best first;
    # handed to later pipeline stages, never persisted
    pool: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "best_energy": self.best_energy,
            "best_config": spin_string(self.best_config),
            "trace": [[t, e] for t, e in self.trace],
            "attempted_flips": int(self.attempted_flips),
            "accepted_flips": int(self.accepted_flips),
            "elapsed_total": self.elapsed_total,
            "config_hash": self.config_hash,
            "config": self.config,
            "info": self.info,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        cfg = d.get("best_config")
        return cls(
            solver=d["solver"],
            best_energy=float(d["best_energy"]),
            best_config=parse_spin_string(cfg) if cfg else None,
            trace=[(float(t), float(e)) for t, e in d.get("trace", [])],
            attempted_flips=int(d.get("attempted_flips", 0)),
            accepted_flips=int(d.get("accepted_flips", 0)),
            elapsed_total=float(d.get("elapsed_total", 0.0)),
            config_hash=d.get("config_hash", ""),
            config=d.get("config", {}),
            info=d.get("info", {}),
        )


def spin_string(spins) -> str | None:
    if spins is None:
        return None
    return "".join("+" if s > 0 else "-" for s in np.asarray(spins))


def parse_spin_string(text: str) -> np.ndarray:
    bad = set(text) - {"+", "-"}
    if bad:
        raise ValueError(f"spin string may only contain '+' and '-', found {sorted(bad)}")
    return np.array([1 if c == "+" else -1 for c in text], dtype=np.int8)


class BestTracker:
    """Monotonic global-best cell shared by the workers of one run.

    Candidates are ranked by (exact energy, worker index) so the final answer
    does not depend on the order in which workers report.
    """

    def __init__(self, instance: HuboInstance, start: float | None = None):
        self.instance = instance
        self.start = time.perf_counter() if start is None else start
        self.energy = math.inf
        self.rank = math.inf
        self.config: np.ndarray | None = None
        self.trace: list[tuple[float, float]] = []
        self._lock = threading.Lock()

    def _stamp(self) -> float:
        t = time.perf_counter() - self.start
        if self.trace and t <= self.trace[-1][0]:
            t = math.nextafter(self.trace[-1][0], math.inf)
        return t

    def offer(self, spins: np.ndarray, rank: int = 0, energy: float | None = None) -> bool:
        e = float(evaluate_energy(self.instance, spins) if energy is None else energy)
        with self._lock:
            if e < self.energy or (e == self.energy and rank < self.rank):
                improved = e < self.energy
                self.energy = e
                self.rank = rank
                self.config = np.array(spins, dtype=np.int8, copy=True)
                if improved:
                    self.trace.append((self._stamp(), e))
                return improved
        return False

    def heartbeat(self) -> None:
        with self._lock:
            if self.trace and time.perf_counter() - self.start - self.trace[-1][0] >= HEARTBEAT:
                self.trace.append((self._stamp(), self.energy))

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


@dataclass(frozen=True)
class SolverConfig:
    variant: ClassVar[str] = ""

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["variant"] = self.variant
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)


def finish(tracker: BestTracker, solver: str, cfg: SolverConfig, attempted: int,
           accepted: int, info: dict | None = None) -> RunResult:
    elapsed = tracker.elapsed()
    if tracker.trace and tracker.trace[-1][0] >= elapsed:
        elapsed = math.nextafter(tracker.trace[-1][0], math.inf)
    return RunResult(
        solver=solver,
        best_energy=tracker.energy,
        best_config=tracker.config,
        trace=list(tracker.trace),
        attempted_flips=int(attempted),
        accepted_flips=int(accepted),
        elapsed_total=elapsed,
        config_hash=cfg.config_hash(),
        config=cfg.to_dict(),
        info=info or {},
    )


def resolve_seed(seed) -> int:
    if seed is None:
        return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
    return int(seed)


def task_streams(seed: int, index: int) -> tuple[np.random.Generator, int]:
    """Independent numpy generator and numba seed for worker task ``index``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)])
    kernel_seed = int(ss.generate_state(1, dtype=np.uint32)[0])
    return np.random.Generator(np.random.PCG64(ss)), kernel_seed


def random_spins(rng: np.random.Generator, n: int) -> np.ndarray:
    return (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)


class SolverEstimator(BaseEstimator):
    """sklearn-style wrapper: constructor arguments are the solver config.

    ``fit(instance)`` runs the solver and stores ``result_``,
    ``best_energy_`` and ``best_config_``.
    """

    _config_cls: ClassVar[type[SolverConfig]]

    def _run(self, instance, cfg, seed):
        raise NotImplementedError

    def config(self) -> SolverConfig:
        params = self.get_params()
        seed = params.pop("seed", None)
        return self._config_cls(**params), seed

    def fit(self, instance: HuboInstance, y=None):
        check_instance(instance)
        cfg, seed = self.config()
        self.result_ = self._run(instance, cfg, seed)
        self.best_energy_ = self.result_.best_energy
        self.best_config_ = self.result_.best_config
        self.n_features_in_ = instance.n_vars
        return self

    def predict(self, instance: HuboInstance | None = None) -> np.ndarray:
        """Best configuration found by the last ``fit``."""
        check_is_fitted(self, "result_")
        if instance is not None and instance.n_vars != self.n_features_in_:
            raise ValueError(
                f"fitted on N={self.n_features_in_}, got instance with N={instance.n_vars}"
            )
        return self.best_config_.copy()

    def fit_predict(self, instance: HuboInstance, y=None) -> np.ndarray:
        return self.fit(instance).predict()


def run_in_pool(fn, items, n_workers: int):
    if n_workers <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, items))
