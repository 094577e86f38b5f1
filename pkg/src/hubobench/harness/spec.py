"""Benchmark spec files and solver entries.

A spec is a JSON document::

    {
      "schema_version": 1,
      "instances": [{"paths": ["a.json"]},
                    {"generate": {"family": "3S", "count": 2, "seed": 7}},
                    {"random": {"n_vars": 18, "count": 3, "seed": 0}}],
      "solvers": [{"label": "SA", "variant": "SA", "params": {"n_restarts": 100}},
                  {"label": "hybrid", "variant": "PIPELINE",
                   "stages": [{"stage": "SA", "params": {"n_restarts": 16}},
                              {"stage": "identity"},
                              {"stage": "GREEDY"}]}],
      "trials": 10,
      "criterion": {"source": "oracle"},
      "epsilon": 1e-4, "p_target": 0.99,
      "seed": 0, "threads": 1, "out": "results"
    }

``criterion.source`` is ``oracle``, ``best-of`` (with ``"solver": label``)
or ``explicit`` (with ``"values": {instance_id: energy}``).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from hubobench.generators import FAMILIES, generate_family, random_instance
from hubobench.io import deserialize_instance, instance_id
from hubobench.core import HuboInstance
from hubobench.solvers import CONFIGS, config_from_dict

SPEC_SCHEMA_VERSION = 1
CRITERION_SOURCES = ("oracle", "best-of", "explicit")
STAGE_KINDS = ("SA", "MTS", "GREEDY", "identity", "perturb-restart", "external-trace")


class SpecError(ValueError):
    """Invalid benchmark spec; the message names the offending field."""


@dataclass(frozen=True)
class SolverEntry:
    label: str
    variant: str
    params: dict = field(default_factory=dict)
    stages: tuple = ()

    def to_dict(self) -> dict:
        d = {"label": self.label, "variant": self.variant, "params": dict(self.params)}
        if self.stages:
            d["stages"] = [dict(s) for s in self.stages]
        return d


@dataclass(frozen=True)
class BenchmarkSpec:
    instances: tuple
    solvers: tuple[SolverEntry, ...]
    trials: int = 1
    criterion: dict = field(default_factory=lambda: {"source": "oracle"})
    epsilon: float = 1e-4
    p_target: float = 0.99
    seed: int = 0
    threads: int = 1
    out: str = "results"
    base_dir: str = "."

    def to_dict(self) -> dict:
        return {
            "schema_version": SPEC_SCHEMA_VERSION,
            "instances": [dict(s) for s in self.instances],
            "solvers": [s.to_dict() for s in self.solvers],
            "trials": self.trials,
            "criterion": dict(self.criterion),
            "epsilon": self.epsilon,
            "p_target": self.p_target,
            "seed": self.seed,
            "threads": self.threads,
            "out": self.out,
            "base_dir": str(Path(self.base_dir).resolve()),
        }

    def override(self, **kwargs) -> "BenchmarkSpec":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def parse_solver_entry(d: dict, where: str = "solver") -> SolverEntry:
    if not isinstance(d, dict):
        raise SpecError(f"{where}: expected an object, got {type(d).__name__}")
    variant = str(d.get("variant", "")).upper()
    label = str(d.get("label") or variant)
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise SpecError(f"{where}.params: expected an object")
    if variant == "PIPELINE":
        stages = d.get("stages")
        if not isinstance(stages, list) or not stages:
            raise SpecError(f"{where}.stages: a pipeline needs a non-empty stage list")
        for k, st in enumerate(stages):
            kind = st.get("stage") if isinstance(st, dict) else None
            if kind not in STAGE_KINDS:
                raise SpecError(f"{where}.stages[{k}].stage: expected one of {STAGE_KINDS}, got {kind!r}")
            if kind in CONFIGS:
                try:
                    config_from_dict({"variant": kind, **st.get("params", {})})
                except ValueError as exc:
                    raise SpecError(f"{where}.stages[{k}].params: {exc}") from None
        return SolverEntry(label, variant, params, tuple(stages))
    try:
        config_from_dict({"variant": variant, **params})
    except ValueError as exc:
        raise SpecError(f"{where}: {exc}") from None
    return SolverEntry(label, variant, params)


def parse_spec(doc: dict, base_dir: str | os.PathLike = ".") -> BenchmarkSpec:
    if not isinstance(doc, dict):
        raise SpecError("spec: expected a JSON object")
    version = doc.get("schema_version", SPEC_SCHEMA_VERSION)
    if version != SPEC_SCHEMA_VERSION:
        raise SpecError(f"schema_version: unsupported value {version!r}")
    instances = doc.get("instances")
    if isinstance(instances, dict):
        instances = [instances]
    if not isinstance(instances, list) or not instances:
        raise SpecError("instances: expected a non-empty list of sources")
    for k, src in enumerate(instances):
        if not isinstance(src, dict) or len(set(src) & {"paths", "generate", "random"}) != 1:
            raise SpecError(f"instances[{k}]: expected exactly one of paths / generate / random")
        kind = next(iter(set(src) & {"paths", "generate", "random"}))
        body = src[kind]
        if kind == "paths":
            if not isinstance(body, list) or not body:
                raise SpecError(f"instances[{k}].paths: expected a non-empty list of files")
            continue
        if not isinstance(body, dict):
            raise SpecError(f"instances[{k}].{kind}: expected an object")
        count = body.get("count", 1)
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            raise SpecError(f"instances[{k}].{kind}.count: must be an integer >= 1, got {count!r}")
        if kind == "generate" and body.get("family") not in FAMILIES:
            raise SpecError(f"instances[{k}].generate.family: expected one of {sorted(FAMILIES)}")
        if kind == "random" and not (isinstance(body.get("n_vars", 18), int) and body.get("n_vars", 18) >= 1):
            raise SpecError(f"instances[{k}].random.n_vars: must be an integer >= 1")
    solvers = doc.get("solvers")
    if not isinstance(solvers, list) or not solvers:
        raise SpecError("solvers: expected a non-empty list")
    entries = tuple(parse_solver_entry(s, f"solvers[{k}]") for k, s in enumerate(solvers))
    labels = [e.label for e in entries]
    if len(set(labels)) != len(labels):
        raise SpecError(f"solvers: labels must be unique, got {labels}")
    trials = doc.get("trials", 1)
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        raise SpecError(f"trials: must be an integer >= 1, got {trials!r}")
    crit = doc.get("criterion", {"source": "oracle"})
    if not isinstance(crit, dict) or crit.get("source") not in CRITERION_SOURCES:
        raise SpecError(f"criterion.source: expected one of {CRITERION_SOURCES}")
    if crit["source"] == "best-of" and crit.get("solver") not in labels:
        raise SpecError(f"criterion.solver: {crit.get('solver')!r} is not a solver label in this spec")
    if crit["source"] == "explicit" and not isinstance(crit.get("values"), dict):
        raise SpecError("criterion.values: explicit targets need an {instance_id: energy} object")
    epsilon = float(doc.get("epsilon", 1e-4))
    p_target = float(doc.get("p_target", 0.99))
    if epsilon < 0:
        raise SpecError("epsilon: must be >= 0")
    if not 0 < p_target < 1:
        raise SpecError("p_target: must lie in (0, 1)")
    threads = doc.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise SpecError(f"threads: must be an integer >= 1, got {threads!r}")
    return BenchmarkSpec(
        instances=tuple(instances),
        solvers=entries,
        trials=trials,
        criterion=crit,
        epsilon=epsilon,
        p_target=p_target,
        seed=int(doc.get("seed", 0)),
        threads=threads,
        out=str(doc.get("out", "results")),
        base_dir=str(doc.get("base_dir", base_dir)),
    )


def load_spec(path: str | os.PathLike) -> BenchmarkSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    return parse_spec(doc, path.parent)


@dataclass(frozen=True)
class ResolvedInstance:
    id: str
    instance: HuboInstance
    path: str | None
    recipe: dict | None


def resolve_instances(spec: BenchmarkSpec) -> list[ResolvedInstance]:
    """Load or generate every instance the spec names, in spec order."""
    out: list[ResolvedInstance] = []
    for k, src in enumerate(spec.instances):
        if "paths" in src:
            for p in src["paths"]:
                full = Path(spec.base_dir, p)
                inst = deserialize_instance(full)
                out.append(ResolvedInstance(instance_id(inst, Path(p).stem), inst, str(p), None))
        elif "generate" in src:
            g = src["generate"]
            fam = g.get("family")
            if fam not in FAMILIES:
                raise SpecError(f"instances[{k}].generate.family: expected one of {sorted(FAMILIES)}")
            insts = generate_family(fam, int(g.get("count", 1)), int(g.get("seed", 0)),
                                    g.get("lattice", "heron-156"))
            for inst in insts:
                out.append(ResolvedInstance(instance_id(inst), inst, None, {"generate": g}))
        else:
            r = src["random"]
            n = int(r.get("n_vars", 18))
            base = int(r.get("seed", 0))
            for j in range(int(r.get("count", 1))):
                name = f"random{n}_{base + j:03d}"
                inst = random_instance(n, base + j, name=name)
                out.append(ResolvedInstance(name, inst, None, {"random": {**r, "index": j}}))
    ids = [r.id for r in out]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise SpecError(f"instances: duplicate instance ids {dup}")
    return out
