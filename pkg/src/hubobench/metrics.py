"""Success probability, time-to-solution, closeness curves and aggregates.

``math.inf`` is the INFINITE marker for time-to-solution throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from hubobench.solvers.base import RunResult

INFINITE = math.inf


@dataclass(frozen=True)
class SuccessCriterion:
    """A run succeeds when its best energy is at most ``e_target + epsilon``."""

    e_target: float
    epsilon: float = 1e-4
    p_target: float = 0.99

    def __post_init__(self):
        if not math.isfinite(self.e_target):
            raise ValueError(f"e_target must be finite, got {self.e_target!r}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not 0 < self.p_target < 1:
            raise ValueError(f"p_target must lie in (0, 1), got {self.p_target!r}")

    def is_hit(self, energy: float) -> bool:
        return energy <= self.e_target + self.epsilon


@dataclass(frozen=True)
class TTSResult:
    t_run: float
    p_hit: float
    tts: float
    n_runs: int | None = None
    n_hits: int | None = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.tts)


def _energy_of(r) -> float:
    return float(r.best_energy if isinstance(r, RunResult) else r)


def estimate_p_hit(results: Sequence, criterion: SuccessCriterion) -> tuple[float, tuple[int, int]]:
    """Fraction of runs that hit the target; returns ``(p_hit, (n_hits, n_runs))``.

    ``results`` may hold :class:`RunResult` objects or bare best energies.
    """
    results = list(results)
    if not results:
        raise ValueError("p_hit needs at least one result")
    hits = sum(criterion.is_hit(_energy_of(r)) for r in results)
    return hits / len(results), (hits, len(results))


def compute_tts(t_run: float, p_hit: float, p_target: float = 0.99,
                n_runs: int | None = None, n_hits: int | None = None) -> TTSResult:
    """t_run * ln(1 - p_target) / ln(1 - p_hit).

    ``p_hit == 0`` gives INFINITE; ``p_hit == 1`` gives ``t_run`` (one run
    succeeds with certainty, where the formula itself is singular).
    """
    if not 0 <= p_hit <= 1:
        raise ValueError(f"p_hit must lie in [0, 1], got {p_hit!r}")
    if not 0 < p_target < 1:
        raise ValueError(f"p_target must lie in (0, 1), got {p_target!r}")
    if not (t_run > 0 and math.isfinite(t_run)):
        raise ValueError(f"t_run must be positive and finite, got {t_run!r}")
    if p_hit == 0:
        tts = INFINITE
    elif p_hit == 1 or p_hit == p_target:
        tts = float(t_run)
    else:
        tts = t_run * math.log1p(-p_target) / math.log1p(-p_hit)
    return TTSResult(float(t_run), float(p_hit), tts, n_runs, n_hits)


def tts_from_results(results: Sequence[RunResult], criterion: SuccessCriterion,
                     t_run: float | None = None) -> TTSResult:
    """TTS for a set of runs; ``t_run`` defaults to their mean wall-clock."""
    p, (hits, n) = estimate_p_hit(results, criterion)
    if t_run is None:
        t_run = float(np.mean([r.elapsed_total for r in results]))
    return compute_tts(t_run, p, criterion.p_target, n, hits)


# closeness


def best_so_far_at(trace: Sequence[tuple[float, float]], grid: np.ndarray) -> np.ndarray:
    """Step (last observation carried forward) interpolation of a best-so-far
    trace on ``grid``; NaN before the first sample. Never looks ahead."""
    grid = np.asarray(grid, dtype=float)
    out = np.full(grid.shape, np.nan)
    if not len(trace):
        return out
    t = np.array([p[0] for p in trace], dtype=float)
    e = np.minimum.accumulate(np.array([p[1] for p in trace], dtype=float))
    idx = np.searchsorted(t, grid, side="right") - 1
    ok = idx >= 0
    out[ok] = e[idx[ok]]
    return out


@dataclass(frozen=True)
class ClosenessCurve:
    grid: np.ndarray
    per_instance: dict[str, np.ndarray]
    mean: np.ndarray
    sigma: np.ndarray
    count: np.ndarray


def default_grid(traces: Mapping[str, Sequence], n_points: int = 200) -> np.ndarray:
    """Geometric grid spanning the earliest to the latest sample time."""
    times = [p[0] for group in traces.values() for tr in group for p in tr]
    if not times:
        raise ValueError("no trace samples")
    lo, hi = min(times), max(times)
    if hi <= lo:
        return np.array([lo])
    if lo > 0:
        return np.geomspace(lo, hi, n_points)
    return np.linspace(lo, hi, n_points)


def closeness_curve(
    traces: Mapping[str, Sequence[Sequence[tuple[float, float]]]],
    e_target: Mapping[str, float],
    grid=None,
) -> ClosenessCurve:
    """C(t) = E_best(t) / E_target per instance, with mean and population
    standard deviation across instances at every grid point.

    ``traces`` maps an instance id to that instance's trial traces; E_best(t)
    is the minimum over those traces of their best-so-far energy at ``t``.
    Grid points where some instance has no sample yet are missing (NaN) for
    that instance and the aggregate counts only the defined ones.
    """
    if not traces:
        raise ValueError("closeness needs at least one instance")
    for key, group in traces.items():
        if not group or not any(len(tr) for tr in group):
            raise ValueError(f"instance {key!r} has no trace samples")
        if key not in e_target:
            raise ValueError(f"no target energy for instance {key!r}")
        et = e_target[key]
        if not et < 0:
            raise ValueError(
                f"closeness ratio needs a negative target, instance {key!r} has {et!r}; "
                "use the energy gap E_best - E_target for non-negative targets"
            )
    grid = default_grid(traces) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a non-empty strictly increasing 1-d array")
    per = {}
    for key, group in traces.items():
        curves = np.vstack([best_so_far_at(tr, grid) for tr in group])
        with np.errstate(all="ignore"):
            # fmin ignores traces that have not started yet
            e_best = np.fmin.reduce(curves, axis=0)
        per[key] = e_best / e_target[key]
    stack = np.vstack(list(per.values()))
    count = np.sum(~np.isnan(stack), axis=0)
    mean = np.full(grid.shape, np.nan)
    sigma = np.full(grid.shape, np.nan)
    ok = count > 0
    with np.errstate(all="ignore"):
        mean[ok] = np.nanmean(stack[:, ok], axis=0)
        sigma[ok] = np.nanstd(stack[:, ok], axis=0)
    return ClosenessCurve(grid, per, mean, sigma, count)


# aggregates


def geometric_mean_tts(values: Sequence[float]) -> tuple[float | None, int]:
    """Geometric mean over the finite entries and the number of infinite ones.

    Returns ``(None, n)`` when every entry is infinite.
    """
    values = [float(v) for v in values]
    if not values:
        raise ValueError("geometric mean needs at least one value")
    for v in values:
        if math.isnan(v) or v <= 0:
            raise ValueError(f"TTS values must be positive, got {v!r}")
    finite = [v for v in values if math.isfinite(v)]
    n_inf = len(values) - len(finite)
    if not finite:
        return None, n_inf
    return math.exp(math.fsum(math.log(v) for v in finite) / len(finite)), n_inf


def throughput(result: RunResult) -> float:
    """Attempted flips per second of wall-clock."""
    if not result.elapsed_total > 0:
        raise ValueError(f"elapsed_total must be positive, got {result.elapsed_total!r}")
    return result.attempted_flips / result.elapsed_total


def aggregate_throughput(results: Sequence[RunResult]) -> float:
    total_t = math.fsum(r.elapsed_total for r in results)
    if not total_t > 0:
        raise ValueError("total elapsed time must be positive")
    return sum(r.attempted_flips for r in results) / total_t


@dataclass(frozen=True)
class SpeedupTable:
    ratios: dict[str, float]
    wins_a: int
    wins_b: int


def speedup_table(tts_a: Mapping[str, float], tts_b: Mapping[str, float]) -> SpeedupTable:
    """Per-instance ratio b / a and win counts (a wins when a < b).

    An infinite TTS loses to any finite one; both infinite is a tie with an
    undefined (NaN) ratio.
    """
    if set(tts_a) != set(tts_b):
        missing = sorted(set(tts_a) ^ set(tts_b))
        raise ValueError(f"instance keys differ: {missing}")
    ratios = {}
    wins_a = wins_b = 0
    for key in sorted(tts_a):
        a, b = float(tts_a[key]), float(tts_b[key])
        if math.isinf(a) and math.isinf(b):
            ratios[key] = math.nan
        elif math.isinf(b):
            ratios[key] = INFINITE
        elif math.isinf(a):
            ratios[key] = 0.0
        else:
            ratios[key] = b / a
        wins_a += a < b
        wins_b += b < a
    return SpeedupTable(ratios, wins_a, wins_b)
