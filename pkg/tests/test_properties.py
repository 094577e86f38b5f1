"""Property tests over randomly drawn small instances."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import naive
from hubobench import (
    HuboInstance,
    apply_flip,
    brute_force_ground_state,
    build_index,
    delta_energy,
    evaluate_energy,
    flip,
)
from hubobench.io import dumps_instance, loads_instance
from hubobench.solvers import SAConfig, greedy_descent, run_sa

coeffs = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda c: abs(c) > 1e-6)


@st.composite
def instances(draw, max_vars=8):
    n = draw(st.integers(3, max_vars))
    raw = draw(st.lists(
        st.tuples(st.lists(st.integers(0, n - 1), min_size=1, max_size=3, unique=True), coeffs),
        max_size=25))
    return HuboInstance.from_terms(n, [(tuple(v), c) for v, c in raw])


@st.composite
def instance_and_config(draw, max_vars=8):
    inst = draw(instances(max_vars))
    s = draw(st.lists(st.sampled_from([-1, 1]), min_size=inst.n_vars, max_size=inst.n_vars))
    return inst, np.array(s, dtype=np.int8)


def tol(inst):
    return 1e-9 * max(1.0, inst.energy_scale())


@given(instance_and_config())
def test_energy_matches_exact_sum(args):
    inst, s = args
    assert abs(evaluate_energy(inst, s) - float(naive.energy(naive.term_list(inst), s))) <= tol(inst)


@given(instance_and_config(), st.data())
def test_delta_identity(args, data):
    inst, s = args
    v = data.draw(st.integers(0, inst.n_vars - 1))
    d = delta_energy(build_index(inst, s), v)
    assert abs(d - (evaluate_energy(inst, flip(s, v)) - evaluate_energy(inst, s))) <= tol(inst)
    assert abs(d - float(naive.flip_delta(naive.term_list(inst), s, v))) <= tol(inst)


@given(instance_and_config(), st.data())
def test_flip_involution_bit_exact(args, data):
    inst, s = args
    table = build_index(inst, s)
    e0, values0 = table.energy, table.values.copy()
    for v in data.draw(st.lists(st.integers(0, inst.n_vars - 1), min_size=1, max_size=10)):
        apply_flip(table, v)
        apply_flip(table, v)
        assert table.energy == e0
        np.testing.assert_array_equal(table.values, values0)
        np.testing.assert_array_equal(table.spins, s)


@given(instance_and_config())
def test_global_inversion_flips_odd_terms(args):
    inst, s = args
    odd = HuboInstance.from_terms(inst.n_vars, [(t.vars, -t.coeff if t.arity % 2 else t.coeff)
                                                for t in inst.terms])
    assert abs(evaluate_energy(inst, -s) - evaluate_energy(odd, s)) <= tol(inst)


@given(instances())
def test_canonical_form_is_idempotent(inst):
    again = HuboInstance.from_terms(inst.n_vars, [(t.vars[::-1], t.coeff) for t in inst.terms])
    assert again.terms == inst.terms


@given(instances())
def test_serialization_round_trip(inst):
    assert loads_instance(dumps_instance(inst)) == inst


@given(instances(max_vars=7))
def test_oracle_is_lower_bound_and_matches_naive(inst):
    gs = brute_force_ground_state(inst)
    e_ref, argmins = naive.ground_state(naive.term_list(inst), inst.n_vars)
    assert abs(gs.energy - float(e_ref)) <= tol(inst)
    assert evaluate_energy(inst, gs.config) == gs.energy
    assert 1 <= gs.degeneracy


@given(instance_and_config())
def test_greedy_never_worsens_and_is_local_min(args):
    inst, s = args
    out = greedy_descent(inst, s)
    assert evaluate_energy(inst, out) <= evaluate_energy(inst, s)
    table = build_index(inst, out)
    assert all(delta_energy(table, v) >= -tol(inst) for v in range(inst.n_vars))


@pytest.mark.parametrize("seed", range(3))
@given(inst=instances(max_vars=7))
def test_sa_bounded_by_oracle(seed, inst):
    res = run_sa(inst, SAConfig(n_restarts=2, n_sweeps=10), seed=seed)
    assert res.best_energy >= brute_force_ground_state(inst).energy - tol(inst)
    assert res.best_energy == evaluate_energy(inst, res.best_config)
