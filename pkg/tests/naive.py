"""Independent reference implementations used as test oracles.

Nothing here touches the compiled arrays or the numba kernels.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction


def term_list(instance):
    return [(tuple(t.vars), float(t.coeff)) for t in instance.terms]


def energy(terms, spins) -> float:
    """Direct sum over terms with exact rational arithmetic, rounded once."""
    total = Fraction(0)
    for vars_, coeff in terms:
        sign = 1
        for v in vars_:
            sign *= int(spins[v])
        total += sign * Fraction(coeff)
    return float(total)


def flip_delta(terms, spins, var) -> float:
    """E(s with var flipped) - E(s), exactly, rounded once."""
    d = Fraction(0)
    for vars_, coeff in terms:
        if var in vars_:
            sign = 1
            for v in vars_:
                sign *= int(spins[v])
            d -= 2 * sign * Fraction(coeff)
    return float(d)


def ground_state(terms, n):
    """Plain itertools enumeration; returns (E_min, minimisers) with exact ties."""
    best = None
    argmins = []
    for cfg in itertools.product((-1, 1), repeat=n):
        total = Fraction(0)
        for vars_, coeff in terms:
            sign = 1
            for v in vars_:
                sign *= cfg[v]
            total += sign * Fraction(coeff)
        if best is None or total < best:
            best, argmins = total, [cfg]
        elif total == best:
            argmins.append(cfg)
    return float(best), argmins


def geometric_mean(values) -> float:
    logs = [math.log(v) for v in values]
    return math.exp(sum(logs) / len(logs))
