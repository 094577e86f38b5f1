"""Benchmark instance families built by swap-layer densification of heavy-hex.

A logical-to-physical assignment starts as the identity. Each iteration maps
the physical interaction supports of its slices through the assignment into
a cumulative logical hypergraph; a SWAP layer between iterations permutes the
assignment along a matching of the coupling graph, so later slices land on
logical tuples that are not native edges. Couplings are then drawn from a
standard Cauchy distribution, one per support.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np

from hubobench.core import HuboInstance

RNG_NAME = "numpy.PCG64"
RNG_VERSION = 1

FAMILIES = {"3S": 3, "4S": 4}

Support = tuple[int, ...]


@dataclass(frozen=True)
class HeavyHexGraph:
    n_nodes: int
    edges: tuple[tuple[int, int], ...]
    selector: str = "heron-156"

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_nodes))
        g.add_edges_from(self.edges)
        return g


# rows x columns of the long qubit rows; bridge columns alternate per gap
_LAYOUTS = {
    "heron-156": (8, 16, ((3, 7, 11, 15), (1, 5, 9, 13))),
    "small-35": (3, 10, ((1, 5, 9), (3, 7))),
}


def build_heavy_hex(size_selector: str = "heron-156") -> HeavyHexGraph:
    """Heavy-hex coupling map, numbered row by row with bridges in between.

    ``heron-156`` is the 156-qubit layout: 8 rows of 16 qubits joined by 4
    bridge qubits per gap, bridge columns alternating between {3, 7, 11, 15}
    and {1, 5, 9, 13}.
    """
    if size_selector not in _LAYOUTS:
        raise ValueError(
            f"unknown lattice {size_selector!r}; supported: {sorted(_LAYOUTS)}"
        )
    n_rows, n_cols, bridge_cols = _LAYOUTS[size_selector]
    edges = []
    rows = []
    nxt = 0
    gaps = []
    for r in range(n_rows):
        rows.append(list(range(nxt, nxt + n_cols)))
        nxt += n_cols
        if r < n_rows - 1:
            cols = bridge_cols[r % 2]
            gaps.append((r, cols, list(range(nxt, nxt + len(cols)))))
            nxt += len(cols)
    for row in rows:
        edges.extend(zip(row, row[1:]))
    for r, cols, bridge in gaps:
        for c, b in zip(cols, bridge):
            edges.append((rows[r][c], b))
            edges.append((b, rows[r + 1][c]))
    edges = tuple(sorted((min(a, b), max(a, b)) for a, b in edges))
    return HeavyHexGraph(nxt, edges, size_selector)


@dataclass(frozen=True)
class SliceSchedule:
    """Interaction slices per iteration plus the SWAP layers between them.

    ``iterations[k]`` is a tuple of slices added at iteration ``k``; each
    slice is a tuple of vertex-disjoint physical supports. ``swap_layers[k]``
    is the matching applied after iteration ``k``. A run with ``n`` swap
    layers uses iterations ``0..n`` and swap layers ``0..n-1``.
    """

    iterations: tuple[tuple[tuple[Support, ...], ...], ...]
    swap_layers: tuple[tuple[tuple[int, int], ...], ...]
    fields: bool = True

    @property
    def max_layers(self) -> int:
        return min(len(self.iterations) - 1, len(self.swap_layers))


@dataclass(frozen=True)
class ScheduleParams:
    """Knobs of the default schedule.

    Every iteration adds all edge-colour matchings as 2-local slices. The
    3-local supports are length-2 paths of the coupling graph, packed into
    vertex-disjoint slices and consumed as a stream: ``base_triples`` at
    iteration 0 and ``triples_per_layer`` at each later iteration. SWAP
    layers alternate between matchings ``swap_colors``.

    The defaults reproduce 1128 (n=3) and 1323 (n=4) terms on heron-156.
    """

    base_triples: int = 120
    triples_per_layer: int = 124
    swap_colors: tuple[int, int] = (0, 1)
    fields: bool = True
    max_layers: int = 8


DEFAULT_SCHEDULE_PARAMS = ScheduleParams()


@dataclass(frozen=True)
class GenerationConfig:
    n_swap_layers: int
    seed: int
    distribution: str = "cauchy"
    lattice: str = "heron-156"
    schedule: ScheduleParams = field(default_factory=lambda: DEFAULT_SCHEDULE_PARAMS)

    def __post_init__(self):
        if self.n_swap_layers < 0:
            raise ValueError("n_swap_layers must be >= 0")
        if self.distribution != "cauchy":
            raise ValueError(f"unsupported coupling distribution {self.distribution!r}")


def edge_matchings(graph: HeavyHexGraph) -> list[list[tuple[int, int]]]:
    """Partition the edges into matchings by greedy colouring of the line graph."""
    line = nx.line_graph(graph.to_networkx())
    colour = nx.coloring.greedy_color(line, strategy="largest_first")
    n_colours = max(colour.values()) + 1
    out = [[] for _ in range(n_colours)]
    for e in sorted(colour, key=lambda e: (min(e), max(e))):
        out[colour[e]].append((min(e), max(e)))
    return out


def path_slices(graph: HeavyHexGraph) -> list[list[Support]]:
    """Length-2 paths (u, centre, w) packed into vertex-disjoint slices."""
    g = graph.to_networkx()
    paths = []
    for v in range(graph.n_nodes):
        for a, b in itertools.combinations(sorted(g[v]), 2):
            paths.append((a, v, b))
    conflict = nx.Graph()
    conflict.add_nodes_from(range(len(paths)))
    by_node: dict[int, list[int]] = {}
    for i, p in enumerate(paths):
        for v in p:
            by_node.setdefault(v, []).append(i)
    for members in by_node.values():
        conflict.add_edges_from(itertools.combinations(members, 2))
    colour = nx.coloring.greedy_color(conflict, strategy="largest_first")
    n_colours = max(colour.values()) + 1
    out = [[] for _ in range(n_colours)]
    for i, p in enumerate(paths):
        out[colour[i]].append(p)
    return out


def default_schedule(
    graph: HeavyHexGraph, params: ScheduleParams = DEFAULT_SCHEDULE_PARAMS
) -> SliceSchedule:
    matchings = edge_matchings(graph)
    two_local = tuple(tuple(m) for m in matchings)
    stream = [(s, p) for s, sl in enumerate(path_slices(graph)) for p in sl]
    pos = 0
    iterations = []
    for k in range(params.max_layers + 1):
        take = params.base_triples if k == 0 else params.triples_per_layer
        chunk: dict[int, list[Support]] = {}
        for _ in range(take):
            s, p = stream[pos % len(stream)]
            chunk.setdefault(s, []).append(p)
            pos += 1
        three_local = tuple(tuple(chunk[s]) for s in sorted(chunk))
        iterations.append(two_local + three_local)
    a, b = params.swap_colors
    swaps = tuple(
        tuple(matchings[a] if k % 2 == 0 else matchings[b]) for k in range(params.max_layers)
    )
    return SliceSchedule(tuple(iterations), swaps, params.fields)


def check_schedule(graph: HeavyHexGraph, schedule: SliceSchedule) -> None:
    g = graph.to_networkx()
    for k, slices in enumerate(schedule.iterations):
        for j, sl in enumerate(slices):
            used: set[int] = set()
            for sup in sl:
                if used.intersection(sup):
                    raise ValueError(
                        f"iteration {k} slice {j}: support {sup} overlaps another support"
                    )
                used.update(sup)
                if not nx.is_connected(g.subgraph(sup)):
                    raise ValueError(f"iteration {k} slice {j}: support {sup} is not connected")
    for k, layer in enumerate(schedule.swap_layers):
        used = set()
        for a, b in layer:
            if not g.has_edge(a, b):
                raise ValueError(f"swap layer {k}: ({a}, {b}) is not a coupling edge")
            if a in used or b in used:
                raise ValueError(f"swap layer {k}: ({a}, {b}) is not part of a matching")
            used.update((a, b))


def densify(
    graph: HeavyHexGraph,
    cfg: GenerationConfig,
    schedule: SliceSchedule | None = None,
) -> list[Support]:
    """Canonical, deduplicated logical supports after ``cfg.n_swap_layers`` layers."""
    if schedule is None:
        schedule = default_schedule(graph, cfg.schedule)
    if cfg.n_swap_layers > schedule.max_layers:
        raise ValueError(
            f"schedule supports at most {schedule.max_layers} swap layers, "
            f"got {cfg.n_swap_layers}"
        )
    check_schedule(graph, schedule)
    logical_at = list(range(graph.n_nodes))
    supports: set[Support] = set()
    if schedule.fields:
        supports.update((v,) for v in range(graph.n_nodes))
    for k in range(cfg.n_swap_layers + 1):
        for sl in schedule.iterations[k]:
            for sup in sl:
                supports.add(tuple(sorted(logical_at[p] for p in sup)))
        if k < cfg.n_swap_layers:
            for a, b in schedule.swap_layers[k]:
                logical_at[a], logical_at[b] = logical_at[b], logical_at[a]
    return sorted(supports, key=lambda s: (len(s), s))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def cauchy_samples(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard Cauchy draws by inverse CDF on u in the open interval (0, 1)."""
    u = rng.random(size)
    zero = u == 0.0
    while zero.any():
        u[zero] = rng.random(int(zero.sum()))
        zero = u == 0.0
    return np.tan(np.pi * (u - 0.5))


def sample_couplings(
    supports: Sequence[Support],
    seed: int,
    n_vars: int | None = None,
    metadata: dict | None = None,
) -> HuboInstance:
    supports = [tuple(s) for s in supports]
    if n_vars is None:
        n_vars = 1 + max(max(s) for s in supports)
    coeffs = cauchy_samples(make_rng(seed), len(supports))
    meta = {"seed": int(seed), "rng": RNG_NAME, "rng_version": RNG_VERSION}
    meta.update(metadata or {})
    return HuboInstance.from_terms(n_vars, zip(supports, coeffs), meta)


def generate(cfg: GenerationConfig, family: str | None = None, name: str | None = None) -> HuboInstance:
    graph = build_heavy_hex(cfg.lattice)
    supports = densify(graph, cfg)
    meta = {
        "family": family or f"{cfg.n_swap_layers}S",
        "n_swap_layers": cfg.n_swap_layers,
        "lattice": cfg.lattice,
        "provenance": "swap-layer densification of heavy-hex, standard Cauchy couplings",
    }
    if name:
        meta["name"] = name
    return sample_couplings(supports, cfg.seed, graph.n_nodes, meta)


def family_seed(base_seed: int, index: int) -> int:
    """Seed of instance ``index`` in a family: ``base_seed XOR index``."""
    return int(base_seed) ^ int(index)


def generate_family(family: str, count: int, base_seed: int, lattice: str = "heron-156") -> list[HuboInstance]:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}")
    if count < 1:
        raise ValueError("count must be >= 1")
    graph = build_heavy_hex(lattice)
    n_layers = FAMILIES[family]
    cfg0 = GenerationConfig(n_layers, base_seed, lattice=lattice)
    supports = densify(graph, cfg0)
    out = []
    for k in range(count):
        seed = family_seed(base_seed, k)
        meta = {
            "family": family,
            "n_swap_layers": n_layers,
            "lattice": lattice,
            "name": f"{family}_{k:03d}",
            "provenance": "swap-layer densification of heavy-hex, standard Cauchy couplings",
        }
        out.append(sample_couplings(supports, seed, graph.n_nodes, meta))
    return out


def random_instance(
    n_vars: int,
    seed: int,
    n_terms: dict[int, int] | None = None,
    name: str | None = None,
) -> HuboInstance:
    """Random mixed-arity instance with Cauchy couplings on uniformly drawn supports.

    ``n_terms`` maps arity to count; the default is N/2 fields, 2N pairs and
    2N triples (capped at the number of available supports).
    """
    if n_terms is None:
        n_terms = {1: n_vars // 2, 2: 2 * n_vars, 3: 2 * n_vars}
    rng = make_rng(seed)
    supports: list[Support] = []
    for arity in sorted(n_terms):
        pool = list(itertools.combinations(range(n_vars), arity))
        k = min(n_terms[arity], len(pool))
        if k:
            pick = rng.choice(len(pool), size=k, replace=False)
            supports.extend(pool[i] for i in sorted(pick))
    coeffs = cauchy_samples(rng, len(supports))
    meta = {
        "family": "random",
        "seed": int(seed),
        "rng": RNG_NAME,
        "rng_version": RNG_VERSION,
        "provenance": "uniform random supports, standard Cauchy couplings",
    }
    if name:
        meta["name"] = name
    return HuboInstance.from_terms(n_vars, zip(supports, coeffs), meta)
