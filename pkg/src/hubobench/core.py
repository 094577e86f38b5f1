"""Ising-form HUBO instances with up to three-local terms.

The energy of a spin configuration ``s`` in {+1, -1}^N is

    H(s) = sum_i J_i s_i + sum_(j,k) J_jk s_j s_k + sum_(u,v,w) J_uvw s_u s_v s_w

Instances are stored as a canonical list of :class:`Term` objects plus a
compiled, array-based view used by the numba kernels in ``_kernels``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from hubobench import _kernels

MAX_ARITY = 3


class Term(NamedTuple):
    """One interaction: ``coeff * prod(s[v] for v in vars)``."""

    vars: tuple[int, ...]
    coeff: float

    @property
    def arity(self) -> int:
        return len(self.vars)


def _canonical_key(term: Term) -> tuple:
    return (len(term.vars), term.vars)


@dataclass(frozen=True, eq=False)
class HuboInstance:
    """Sparse hypergraph of 1-, 2- and 3-local couplings over ``n_vars`` spins.

    The plain constructor stores terms as given so that malformed input can be
    inspected with :func:`validate_instance`. Use :meth:`from_terms` to build
    a canonical instance (duplicates merged, zero sums dropped, terms sorted
    by arity then lexicographically).
    """

    n_vars: int
    terms: tuple[Term, ...]
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_terms(
        cls,
        n_vars: int,
        terms: Iterable[tuple[Sequence[int], float]],
        metadata: dict | None = None,
    ) -> "HuboInstance":
        merged: dict[tuple[int, ...], float] = {}
        for vars_, coeff in terms:
            key = tuple(sorted(int(v) for v in vars_))
            if len(set(key)) != len(key):
                raise ValueError(f"term {tuple(vars_)} repeats a variable")
            if not 1 <= len(key) <= MAX_ARITY:
                raise ValueError(f"term {tuple(vars_)} has arity {len(key)}; expected 1..{MAX_ARITY}")
            merged[key] = merged.get(key, 0.0) + float(coeff)
        canon = sorted(
            (Term(k, c) for k, c in merged.items() if c != 0.0), key=_canonical_key
        )
        inst = cls(int(n_vars), tuple(canon), dict(metadata or {}))
        report = validate_instance(inst)
        if report:
            raise ValueError("invalid instance: " + "; ".join(report))
        return inst

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HuboInstance):
            return NotImplemented
        return (
            self.n_vars == other.n_vars
            and self.terms == other.terms
            and self.metadata == other.metadata
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def term_counts(self) -> dict[int, int]:
        counts = {1: 0, 2: 0, 3: 0}
        for t in self.terms:
            counts[t.arity] += 1
        return counts

    def energy_scale(self) -> float:
        """Sum of absolute coefficients; an upper bound on ``|H(s)|``."""
        return float(math.fsum(abs(t.coeff) for t in self.terms))

    @cached_property
    def arrays(self) -> "CompiledInstance":
        return CompiledInstance.from_instance(self)


@dataclass(frozen=True, eq=False)
class CompiledInstance:
    """Flat arrays for the hot loops.

    ``term_vars`` is (M, 3) with unused slots pointing at index ``n_vars``,
    a sentinel spin that is always +1. ``var_ptr``/``var_terms`` is the CSR
    map from each variable to the ids of the terms containing it.
    """

    n_vars: int
    term_vars: np.ndarray
    arity: np.ndarray
    coeff: np.ndarray
    var_ptr: np.ndarray
    var_terms: np.ndarray

    @classmethod
    def from_instance(cls, inst: HuboInstance) -> "CompiledInstance":
        m = len(inst.terms)
        term_vars = np.full((m, MAX_ARITY), inst.n_vars, dtype=np.int64)
        arity = np.zeros(m, dtype=np.int64)
        coeff = np.zeros(m, dtype=np.float64)
        for t_id, t in enumerate(inst.terms):
            term_vars[t_id, : len(t.vars)] = t.vars
            arity[t_id] = len(t.vars)
            coeff[t_id] = t.coeff
        degree = np.zeros(inst.n_vars + 1, dtype=np.int64)
        for t in inst.terms:
            for v in t.vars:
                degree[v + 1] += 1
        var_ptr = np.cumsum(degree)
        var_terms = np.empty(var_ptr[-1], dtype=np.int64)
        fill = var_ptr[:-1].copy()
        for t_id, t in enumerate(inst.terms):
            for v in t.vars:
                var_terms[fill[v]] = t_id
                fill[v] += 1
        for a in (term_vars, arity, coeff, var_ptr, var_terms):
            a.setflags(write=False)
        return cls(inst.n_vars, term_vars, arity, coeff, var_ptr, var_terms)

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.var_ptr)


def as_spins(config, n_vars: int | None = None) -> np.ndarray:
    """Validate a +/-1 configuration and return it as an int8 array."""
    spins = np.asarray(config)
    if spins.ndim != 1:
        raise ValueError(f"spin configuration must be 1-D, got shape {spins.shape}")
    if n_vars is not None and spins.shape[0] != n_vars:
        raise ValueError(
            f"spin configuration has length {spins.shape[0]} but instance has N={n_vars}"
        )
    if not np.all((spins == 1) | (spins == -1)):
        raise ValueError("spin configuration entries must be exactly +1 or -1")
    return spins.astype(np.int8, copy=True)


def evaluate_energy(instance: HuboInstance, config) -> float:
    """Full energy of ``config`` under ``instance``."""
    spins = as_spins(config, instance.n_vars)
    a = instance.arrays
    return _kernels.energy(a.term_vars, a.coeff, spins)


def evaluate_energies(instance: HuboInstance, configs) -> np.ndarray:
    """Energies for a (P, N) batch of configurations."""
    configs = np.asarray(configs, dtype=np.int8)
    if configs.ndim != 2 or configs.shape[1] != instance.n_vars:
        raise ValueError(
            f"expected a (P, {instance.n_vars}) batch of configurations, got {configs.shape}"
        )
    a = instance.arrays
    return np.array([_kernels.energy(a.term_vars, a.coeff, c) for c in configs])


def validate_instance(instance: HuboInstance) -> list[str]:
    """Collect structural violations; an empty list means the instance is valid."""
    report: list[str] = []
    n = instance.n_vars
    if not isinstance(n, (int, np.integer)) or n < 1:
        report.append(f"n_vars must be a positive integer, got {n!r}")
        n = None
    seen: dict[tuple[int, ...], int] = {}
    prev_key = None
    for pos, term in enumerate(instance.terms):
        vars_ = tuple(term.vars)
        if not 1 <= len(vars_) <= MAX_ARITY:
            report.append(f"term {pos}: arity {len(vars_)} outside 1..{MAX_ARITY}")
        if len(set(vars_)) != len(vars_):
            report.append(f"term {pos}: repeated variable in {vars_}")
        if n is not None and any(v < 0 or v >= n for v in vars_):
            report.append(f"term {pos}: index out of range in {vars_} (N={n})")
        if not math.isfinite(term.coeff):
            report.append(f"term {pos}: non-finite coefficient {term.coeff!r}")
        elif term.coeff == 0.0:
            report.append(f"term {pos}: zero coefficient")
        key = tuple(sorted(vars_))
        if key in seen:
            report.append(f"term {pos}: duplicate vars {key} (first at term {seen[key]})")
        else:
            seen[key] = pos
        if key != vars_:
            report.append(f"term {pos}: indices {vars_} not strictly increasing")
        ckey = (len(key), key)
        if prev_key is not None and ckey <= prev_key:
            report.append(f"term {pos}: non-canonical order")
        prev_key = ckey
    return report


def _add_exact(partials: list[float], x: float) -> None:
    """Shewchuk's exact accumulation: after the call ``partials`` sums exactly
    to the old total plus ``x``."""
    i = 0
    for y in partials:
        if abs(x) < abs(y):
            x, y = y, x
        hi = x + y
        lo = y - (hi - x)
        if lo:
            partials[i] = lo
            i += 1
        x = hi
    partials[i:] = [x]


class VariableIndexTable:
    """Per-variable term lists with cached term values for O(deg) flips.

    ``values[t]`` holds ``coeff[t] * prod(spins[v] for v in term t)`` for the
    configuration the table is synchronized with; ``energy`` is the running
    total maintained by :func:`apply_flip`, kept exactly and rounded once.
    """

    def __init__(self, instance: HuboInstance, spins: np.ndarray):
        self.instance = instance
        self.arrays = instance.arrays
        self.spins = spins
        self.values = _kernels.term_values(self.arrays.term_vars, self.arrays.coeff, spins)
        # exact running sum as non-overlapping partials, so that flipping a
        # variable twice restores the energy bit for bit
        self._partials: list[float] = []
        for v in self.values:
            _add_exact(self._partials, float(v))

    @property
    def energy(self) -> float:
        return math.fsum(self._partials)

    @property
    def total_terms(self) -> int:
        return int(self.arrays.var_ptr[-1])

    def terms_of(self, var: int) -> list[tuple[int, float]]:
        lo, hi = self.arrays.var_ptr[var], self.arrays.var_ptr[var + 1]
        return [(int(t), float(self.values[t])) for t in self.arrays.var_terms[lo:hi]]

    def _check_var(self, var: int) -> int:
        if not 0 <= var < self.instance.n_vars:
            raise IndexError(f"variable {var} out of range for N={self.instance.n_vars}")
        return int(var)


def build_index(instance: HuboInstance, config) -> VariableIndexTable:
    """Synchronize a new index table with ``config`` (the spins are copied)."""
    return VariableIndexTable(instance, as_spins(config, instance.n_vars))


def delta_energy(table: VariableIndexTable, var: int) -> float:
    """Energy change from flipping ``var``: -2 times its cached term values."""
    var = table._check_var(var)
    a = table.arrays
    return _kernels.delta(a.var_ptr, a.var_terms, table.values, var)


def apply_flip(table: VariableIndexTable, var: int) -> float:
    """Flip ``var`` in place, keep the cache synchronized, return the new energy."""
    var = table._check_var(var)
    a = table.arrays
    d = _kernels.flip(a.var_ptr, a.var_terms, table.values, table.spins, var)
    _add_exact(table._partials, d)
    return table.energy


def flip(config, var: int) -> np.ndarray:
    out = np.array(config, dtype=np.int8, copy=True)
    out[var] = -out[var]
    return out
