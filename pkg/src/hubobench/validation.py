"""Input validation helpers shared by solvers, pipeline and harness."""
from __future__ import annotations

import numbers

import numpy as np

from hubobench.core import HuboInstance, as_spins, validate_instance


def check_instance(instance, allow_empty: bool = True) -> HuboInstance:
    if not isinstance(instance, HuboInstance):
        raise TypeError(f"expected a HuboInstance, got {type(instance).__name__}")
    report = validate_instance(instance)
    if report:
        raise ValueError("invalid instance: " + "; ".join(report[:5]))
    if not allow_empty and instance.n_terms == 0:
        raise ValueError("instance has no terms")
    return instance


def check_spins(config, instance: HuboInstance) -> np.ndarray:
    return as_spins(config, instance.n_vars)


def check_pool(pool, instance: HuboInstance) -> np.ndarray:
    """A (P, N) int8 array of +/-1 configurations with P >= 1."""
    arr = np.asarray(pool)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] != instance.n_vars:
        raise ValueError(
            f"candidate pool must have shape (P>=1, {instance.n_vars}), got {arr.shape}"
        )
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("candidate pool entries must be +1 or -1")
    return arr.astype(np.int8)


def check_positive(name: str, value, integer: bool = False, allow_none: bool = False):
    if value is None and allow_none:
        return None
    kind = numbers.Integral if integer else numbers.Real
    if not isinstance(value, kind) or isinstance(value, bool) or not value > 0:
        raise ValueError(f"{name} must be a positive {'integer' if integer else 'number'}, got {value!r}")
    return value


def check_probability(name: str, value, open_low=False, open_high=False) -> float:
    v = float(value)
    lo_ok = v > 0 if open_low else v >= 0
    hi_ok = v < 1 if open_high else v <= 1
    if not (lo_ok and hi_ok) or v != v:
        raise ValueError(f"{name} must be a probability, got {value!r}")
    return v
