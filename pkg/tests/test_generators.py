import math

import networkx as nx
import numpy as np
import pytest

from hubobench.generators import (
    FAMILIES,
    GenerationConfig,
    ScheduleParams,
    SliceSchedule,
    build_heavy_hex,
    cauchy_samples,
    check_schedule,
    default_schedule,
    densify,
    edge_matchings,
    family_seed,
    generate,
    generate_family,
    make_rng,
    path_slices,
    random_instance,
    sample_couplings,
)
from hubobench.io import dumps_instance


def grid_heavy_hex(n_rows=8, n_cols=16, bridges=((3, 7, 11, 15), (1, 5, 9, 13))):
    """Coordinate construction: row qubits at (2r, c), bridge qubits at
    (2r+1, c); couplers join grid neighbours at distance one."""
    nodes = {(2 * r, c) for r in range(n_rows) for c in range(n_cols)}
    for r in range(n_rows - 1):
        nodes |= {(2 * r + 1, c) for c in bridges[r % 2]}
    g = nx.Graph()
    g.add_nodes_from(nodes)
    for (y, x) in nodes:
        for (dy, dx) in ((0, 1), (1, 0)):
            if (y + dy, x + dx) in nodes:
                g.add_edge((y, x), (y + dy, x + dx))
    return g


@pytest.fixture(scope="module")
def heron():
    return build_heavy_hex()


class TestHeavyHex:
    def test_default_size_and_degree(self, heron):
        assert heron.n_nodes == 156
        assert heron.degrees.max() <= 3
        assert nx.is_connected(heron.to_networkx())

    def test_matches_coordinate_enumeration(self, heron):
        ref = grid_heavy_hex()
        assert ref.number_of_nodes() == 156
        assert len(heron.edges) == ref.number_of_edges() == 176
        assert sorted(heron.degrees.tolist()) == sorted(d for _, d in ref.degree())
        assert nx.is_isomorphic(heron.to_networkx(), ref)

    def test_small_layout(self):
        g = build_heavy_hex("small-35")
        ref = grid_heavy_hex(3, 10, ((1, 5, 9), (3, 7)))
        assert g.n_nodes == 35 and nx.is_isomorphic(g.to_networkx(), ref)

    def test_unknown_selector(self):
        with pytest.raises(ValueError, match="unknown lattice"):
            build_heavy_hex("falcon-27x")

    def test_edges_canonical(self, heron):
        assert all(a < b for a, b in heron.edges)
        assert list(heron.edges) == sorted(set(heron.edges))


class TestSchedule:
    def test_matchings_partition_edges(self, heron):
        ms = edge_matchings(heron)
        flat = [e for m in ms for e in m]
        assert sorted(flat) == sorted(heron.edges)
        for m in ms:
            nodes = [v for e in m for v in e]
            assert len(nodes) == len(set(nodes))

    def test_path_slices_disjoint_and_connected(self, heron):
        g = heron.to_networkx()
        slices = path_slices(heron)
        paths = [p for sl in slices for p in sl]
        assert len(paths) == len(set(paths))
        # one path per unordered neighbour pair of every node
        assert len(paths) == sum(math.comb(d, 2) for d in heron.degrees)
        for sl in slices:
            nodes = [v for p in sl for v in p]
            assert len(nodes) == len(set(nodes))
        for p in paths:
            assert g.has_edge(p[0], p[1]) and g.has_edge(p[1], p[2])

    def test_default_schedule_is_valid(self, heron):
        check_schedule(heron, default_schedule(heron))

    def test_overlapping_slice_rejected(self, heron):
        e0, e1 = heron.edges[0], heron.edges[1]
        shared = (e0[0], e0[1]) if e0[0] in e1 or e0[1] in e1 else None
        assert shared is not None
        bad = SliceSchedule(iterations=(((e0, e1),),), swap_layers=())
        with pytest.raises(ValueError, match="overlaps"):
            densify(heron, GenerationConfig(0, 1), bad)

    def test_disconnected_support_rejected(self, heron):
        bad = SliceSchedule(iterations=((((0, 100),),),), swap_layers=())
        with pytest.raises(ValueError, match="not connected"):
            densify(heron, GenerationConfig(0, 1), bad)

    def test_swap_must_be_edge(self, heron):
        bad = SliceSchedule(iterations=((), ()), swap_layers=(((0, 100),),))
        with pytest.raises(ValueError, match="not a coupling edge"):
            densify(heron, GenerationConfig(1, 1), bad)

    def test_too_many_layers(self, heron):
        with pytest.raises(ValueError, match="at most"):
            densify(heron, GenerationConfig(9, 1))


class TestDensify:
    def test_zero_layers_is_base_iteration(self, heron):
        sched = default_schedule(heron)
        got = densify(heron, GenerationConfig(0, 1))
        base = {(v,) for v in range(156)} | {tuple(sorted(s)) for sl in sched.iterations[0] for s in sl}
        assert set(got) == base

    def test_calibrated_counts(self, heron):
        n3 = densify(heron, GenerationConfig(3, 0))
        n4 = densify(heron, GenerationConfig(4, 0))
        assert len(n3) == 1128
        assert len(n4) == 1323

    def test_cumulative(self, heron):
        prev = set()
        for n in range(6):
            cur = set(densify(heron, GenerationConfig(n, 5)))
            assert prev <= cur
            prev = cur

    def test_canonical_supports(self, heron):
        sups = densify(heron, GenerationConfig(4, 0))
        assert sups == sorted(set(sups), key=lambda s: (len(s), s))
        assert all(list(s) == sorted(set(s)) and 1 <= len(s) <= 3 for s in sups)
        assert all(0 <= v < 156 for s in sups for v in s)

    def test_no_fields_option(self, heron):
        sups = densify(heron, GenerationConfig(3, 0, schedule=ScheduleParams(fields=False)))
        assert all(len(s) > 1 for s in sups)
        assert len(sups) == 1128 - 156


class TestCouplings:
    def test_cauchy_statistics(self):
        x = cauchy_samples(make_rng(2024), 100_000)
        assert -0.02 <= np.median(x) <= 0.02
        tail = np.mean(np.abs(x) > 10)
        assert 0.058 <= tail <= 0.069
        assert np.all(np.isfinite(x))

    def test_reference_tail_value(self):
        assert 1 - 2 / math.pi * math.atan(10) == pytest.approx(0.0635, abs=1e-4)

    def test_same_seed_same_sequence(self):
        a = cauchy_samples(make_rng(7), 1000)
        b = cauchy_samples(make_rng(7), 1000)
        assert a.tobytes() == b.tobytes()
        assert a.tobytes() != cauchy_samples(make_rng(8), 1000).tobytes()

    def test_sample_couplings(self):
        sups = [(0,), (0, 1), (0, 1, 2)]
        inst = sample_couplings(sups, 3, n_vars=3)
        assert [t.vars for t in inst.terms] == sups
        assert inst.metadata["seed"] == 3 and inst.metadata["rng"] == "numpy.PCG64"
        np.testing.assert_array_equal([t.coeff for t in inst.terms], cauchy_samples(make_rng(3), 3))


class TestFamilies:
    def test_family_seed_xor(self):
        assert family_seed(0b1010, 3) == 0b1001

    def test_generate_family(self):
        insts = generate_family("3S", 3, 42)
        assert [i.n_vars for i in insts] == [156] * 3
        assert [i.metadata["seed"] for i in insts] == [42, 43, 40]
        assert all(i.n_terms == 1128 for i in insts)
        assert insts[0].metadata["family"] == "3S" and insts[0].metadata["n_swap_layers"] == 3
        assert insts[0].terms != insts[1].terms

    def test_4s_superset_of_3s(self):
        a = generate_family("3S", 2, 9)
        b = generate_family("4S", 2, 9)
        for x, y in zip(a, b):
            assert {t.vars for t in x.terms} < {t.vars for t in y.terms}
            cx, cy = x.term_counts(), y.term_counts()
            assert x.n_terms < y.n_terms
            assert all(cx[k] <= cy[k] for k in cx)

    def test_byte_identical_regeneration(self):
        a = [dumps_instance(i) for i in generate_family("4S", 2, 123)]
        b = [dumps_instance(i) for i in generate_family("4S", 2, 123)]
        assert a == b

    def test_generate_matches_family_member(self):
        direct = generate(GenerationConfig(3, family_seed(5, 1)), name="3S_001")
        fam = generate_family("3S", 2, 5)[1]
        assert [t for t in direct.terms] == [t for t in fam.terms]

    def test_bad_requests(self):
        with pytest.raises(ValueError):
            generate_family("5S", 1, 0)
        with pytest.raises(ValueError):
            generate_family("3S", 0, 0)
        with pytest.raises(ValueError):
            GenerationConfig(-1, 0)
        with pytest.raises(ValueError):
            GenerationConfig(3, 0, distribution="gauss")
        assert set(FAMILIES) == {"3S", "4S"}


def test_random_instance_shape():
    inst = random_instance(18, seed=1)
    assert inst.n_vars == 18
    assert inst.term_counts() == {1: 9, 2: 36, 3: 36}
    assert random_instance(18, seed=1) == inst
