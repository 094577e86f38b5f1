"""numba kernels shared by the energy model, the solvers and the oracle.

Every kernel works on the flat arrays of ``CompiledInstance``. Random draws
come from numba's thread-local generator, which is seeded explicitly with
:func:`seed_rng` at the start of each independent task.
"""
import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def seed_rng(seed):
    np.random.seed(seed)


@njit(**_JIT)
def uniform():
    return np.random.random()


@njit(**_JIT)
def energy(term_vars, coeff, spins):
    n = spins.shape[0]
    total = 0.0
    for t in range(coeff.shape[0]):
        v = coeff[t]
        for j in range(3):
            k = term_vars[t, j]
            if k < n:
                v *= spins[k]
        total += v
    return total


@njit(**_JIT)
def term_values(term_vars, coeff, spins):
    n = spins.shape[0]
    out = np.empty(coeff.shape[0])
    for t in range(coeff.shape[0]):
        v = coeff[t]
        for j in range(3):
            k = term_vars[t, j]
            if k < n:
                v *= spins[k]
        out[t] = v
    return out


@njit(**_JIT)
def delta(var_ptr, var_terms, values, var):
    acc = 0.0
    for p in range(var_ptr[var], var_ptr[var + 1]):
        acc += values[var_terms[p]]
    return -2.0 * acc


@njit(**_JIT)
def all_deltas(var_ptr, var_terms, values, out):
    for i in range(out.shape[0]):
        acc = 0.0
        for p in range(var_ptr[i], var_ptr[i + 1]):
            acc += values[var_terms[p]]
        out[i] = -2.0 * acc


@njit(**_JIT)
def flip(var_ptr, var_terms, values, spins, var):
    """Flip ``var``, negate its cached terms, return the energy change."""
    acc = 0.0
    for p in range(var_ptr[var], var_ptr[var + 1]):
        t = var_terms[p]
        acc += values[t]
        values[t] = -values[t]
    spins[var] = -spins[var]
    return -2.0 * acc


@njit(**_JIT)
def flip_tracked(var_ptr, var_terms, term_vars, values, spins, deltas, var):
    """Flip ``var`` and update the per-variable flip deltas incrementally."""
    n = spins.shape[0]
    for p in range(var_ptr[var], var_ptr[var + 1]):
        t = var_terms[p]
        old = values[t]
        values[t] = -old
        for j in range(3):
            k = term_vars[t, j]
            if k < n and k != var:
                deltas[k] += 4.0 * old
    spins[var] = -spins[var]
    d = deltas[var]
    deltas[var] = -d
    return d


@njit(**_JIT)
def metropolis_accept(d, beta, u):
    """Accept downhill or flat moves; uphill with probability exp(-beta * d)."""
    if d <= 0.0:
        return True
    return u < np.exp(-beta * d)


@njit(**_JIT)
def anneal_sweeps(var_ptr, var_terms, term_vars, values, spins, deltas, state,
                  best_spins, betas, counters):
    """Sequential-order Metropolis sweeps, one sweep per entry of ``betas``.

    ``state`` is [energy, best_energy]; ``counters`` is [attempted, accepted].
    """
    n = spins.shape[0]
    e = state[0]
    best = state[1]
    accepted = 0
    for s in range(betas.shape[0]):
        beta = betas[s]
        for i in range(n):
            d = deltas[i]
            if d <= 0.0 or metropolis_accept(d, beta, np.random.random()):
                flip_tracked(var_ptr, var_terms, term_vars, values, spins, deltas, i)
                e += d
                accepted += 1
                if e < best:
                    best = e
                    best_spins[:] = spins
    counters[0] += betas.shape[0] * n
    counters[1] += accepted
    state[0] = e
    state[1] = best


@njit(**_JIT)
def tempering_sweeps(var_ptr, var_terms, term_vars, values, spins, deltas, energies,
                     betas, slot_of, n_sweeps, interval, sweep_offset, best_state,
                     best_spins, counters, ex_attempt, ex_accept, parity):
    """Replica-exchange sweeps.

    Replica ``r`` runs at temperature slot ``slot_of[r]``; exchanges swap slot
    assignments between replicas sitting at adjacent temperatures. Exchanges
    run every ``interval`` sweeps, alternating even and odd adjacent pairs.
    """
    n_rep = spins.shape[0]
    n = spins.shape[1]
    k = betas.shape[0]
    rep_at = np.empty(k, dtype=np.int64)
    for r in range(n_rep):
        rep_at[slot_of[r]] = r
    accepted = 0
    best = best_state[0]
    for s in range(n_sweeps):
        for r in range(n_rep):
            beta = betas[slot_of[r]]
            e = energies[r]
            for i in range(n):
                d = deltas[r, i]
                if d <= 0.0 or metropolis_accept(d, beta, np.random.random()):
                    flip_tracked(var_ptr, var_terms, term_vars, values[r], spins[r],
                                 deltas[r], i)
                    e += d
                    accepted += 1
                    if e < best:
                        best = e
                        best_spins[:] = spins[r]
            energies[r] = e
        if (sweep_offset + s + 1) % interval != 0:
            continue
        start = parity[0]
        for a in range(start, k - 1, 2):
            ra = rep_at[a]
            rb = rep_at[a + 1]
            x = (betas[a] - betas[a + 1]) * (energies[ra] - energies[rb])
            ex_attempt[a] += 1
            if x >= 0.0 or np.random.random() < np.exp(x):
                ex_accept[a] += 1
                rep_at[a] = rb
                rep_at[a + 1] = ra
                slot_of[rb] = a
                slot_of[ra] = a + 1
        parity[0] = 1 - start
    counters[0] += n_sweeps * n_rep * n
    counters[1] += accepted
    best_state[0] = best


@njit(**_JIT)
def tabu_search(var_ptr, var_terms, term_vars, values, spins, deltas, state,
                best_spins, tenure, n_iters, aspiration_level, tabu_until, counters):
    """Single-flip tabu search with recency tabu list and aspiration.

    ``state`` is [energy, best_energy_of_this_search]. Variable ``i`` is tabu
    while the iteration counter is below ``tabu_until[i]``; a tabu move is
    still taken when it would improve on ``min(aspiration_level, search
    best)``. Each iteration takes the best admissible move, uphill or not.
    """
    n = spins.shape[0]
    e = state[0]
    best = state[1]
    accepted = 0
    for it in range(n_iters):
        bound = best if best < aspiration_level else aspiration_level
        move = -1
        move_d = np.inf
        for i in range(n):
            d = deltas[i]
            if d < move_d and (tabu_until[i] <= it or e + d < bound):
                move = i
                move_d = d
        if move < 0:
            break
        flip_tracked(var_ptr, var_terms, term_vars, values, spins, deltas, move)
        e += move_d
        accepted += 1
        tabu_until[move] = it + 1 + tenure
        if e < best:
            best = e
            best_spins[:] = spins
    counters[0] += accepted * n
    counters[1] += accepted
    state[0] = e
    state[1] = best


@njit(**_JIT)
def greedy_descent(var_ptr, var_terms, term_vars, values, spins):
    """Steepest single-flip descent, lowest index wins ties.

    Deltas of touched variables are recomputed from the cached term values
    after every move, so the stopping test uses the same numbers as
    :func:`delta`. Returns the number of flips applied.
    """
    n = spins.shape[0]
    deltas = np.empty(n)
    all_deltas(var_ptr, var_terms, values, deltas)
    moves = 0
    while True:
        move = -1
        move_d = 0.0
        for i in range(n):
            if deltas[i] < move_d:
                move = i
                move_d = deltas[i]
        if move < 0:
            return moves
        flip(var_ptr, var_terms, values, spins, move)
        moves += 1
        for p in range(var_ptr[move], var_ptr[move + 1]):
            t = var_terms[p]
            for j in range(3):
                k = term_vars[t, j]
                if k < n:
                    deltas[k] = delta(var_ptr, var_terms, values, k)
        deltas[move] = delta(var_ptr, var_terms, values, move)


@njit(**_JIT)
def gray_enumerate(var_ptr, var_terms, values, spins, loose_tol, cand_codes, cand_e):
    """Visit all 2^N configurations in Gray-code order from ``spins``.

    Bit ``i`` of a code is set when spin ``i`` differs from the start
    configuration. Codes whose running energy lies within ``loose_tol`` of the
    running minimum are collected into ``cand_codes`` for exact re-scoring.
    Returns (running minimum, number of candidates, number of flips); the
    candidate count is -1 if the buffer overflowed.
    """
    n = spins.shape[0]
    cap = cand_codes.shape[0]
    e = 0.0
    for t in range(values.shape[0]):
        e += values[t]
    best = e
    n_cand = 1
    cand_codes[0] = 0
    cand_e[0] = e
    code = 0
    flips = 0
    total = 1 << n
    for k in range(1, total):
        i = 0
        kk = k
        while (kk & 1) == 0:
            kk >>= 1
            i += 1
        e += flip(var_ptr, var_terms, values, spins, i)
        code ^= 1 << i
        flips += 1
        if e < best - loose_tol:
            n_cand = 0
        if e < best:
            best = e
        if e <= best + loose_tol:
            if n_cand == cap:
                w = 0
                for c in range(n_cand):
                    if cand_e[c] <= best + loose_tol:
                        cand_codes[w] = cand_codes[c]
                        cand_e[w] = cand_e[c]
                        w += 1
                n_cand = w
                if n_cand == cap:
                    return best, -1, flips
            cand_codes[n_cand] = code
            cand_e[n_cand] = e
            n_cand += 1
        if (k & 1023) == 0:
            e = 0.0
            for t in range(values.shape[0]):
                e += values[t]
    return best, n_cand, flips
