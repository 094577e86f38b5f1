"""Instance file format.

A JSON document laid out one record per line::

    {"format_version": 1, "n_vars": 3, "family": "3S", "n_swap_layers": 3,
     "seed": 7, "term_counts": {"1": 0, "2": 0, "3": 1},
     "metadata": {...},
     "terms": [
    [3, [0, 1, 2], 1.0000000000000000],
    ...
    ]}

The header sits on the first line. Each term record is ``[arity, indices,
coefficient]`` on its own line, with the coefficient written at 17
significant digits so that it reads back bit-exactly.
"""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

from hubobench.core import HuboInstance, Term, validate_instance

FORMAT_VERSION = 1
_HEADER_KEYS = ("family", "n_swap_layers", "seed")


class InstanceFormatError(ValueError):
    """Malformed instance file; the message names the line and field."""


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def dumps_instance(instance: HuboInstance) -> str:
    meta = dict(instance.metadata)
    header = {"format_version": FORMAT_VERSION, "n_vars": instance.n_vars}
    for key in _HEADER_KEYS:
        header[key] = meta.pop(key, None)
    header["term_counts"] = {str(k): v for k, v in instance.term_counts().items()}
    header["metadata"] = meta
    head = json.dumps(header, sort_keys=False)
    lines = [head[:-1] + ', "terms": [']
    records = [
        f"[{t.arity}, {json.dumps(list(t.vars))}, {format_float(t.coeff)}]"
        for t in instance.terms
    ]
    lines.append(",\n".join(records))
    lines.append("]}")
    return "\n".join(lines) + "\n"


def _fail(path, line, msg):
    where = f"{path}:" if path else ""
    raise InstanceFormatError(f"{where}{line}: {msg}")


def loads_instance(text: str, path: str | None = None) -> HuboInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        _fail(path, exc.lineno, f"invalid JSON: {exc.msg}")
    if not isinstance(doc, dict):
        _fail(path, 1, "top level must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        _fail(path, 1, f"field format_version: unsupported value {version!r}")
    n_vars = doc.get("n_vars")
    if not isinstance(n_vars, int) or n_vars < 1:
        _fail(path, 1, f"field n_vars: expected positive integer, got {n_vars!r}")
    raw_terms = doc.get("terms")
    if not isinstance(raw_terms, list):
        _fail(path, 1, "field terms: expected a list")
    # header occupies line 1 and term k sits on line k + 2 in files we write
    terms = []
    for k, rec in enumerate(raw_terms):
        line = k + 2
        if not (isinstance(rec, list) and len(rec) == 3):
            _fail(path, line, f"term {k}: expected [arity, indices, coefficient]")
        arity, idx, coeff = rec
        if not isinstance(idx, list) or not all(isinstance(i, int) for i in idx):
            _fail(path, line, f"term {k} field indices: expected integer list, got {idx!r}")
        if arity != len(idx):
            _fail(path, line, f"term {k} field arity: {arity!r} does not match {len(idx)} indices")
        if not 1 <= len(idx) <= 3:
            _fail(path, line, f"term {k} field arity: {len(idx)} outside 1..3")
        bad = [i for i in idx if i < 0 or i >= n_vars]
        if bad:
            _fail(path, line, f"term {k} field indices: {bad} out of range for n_vars={n_vars}")
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool) or not math.isfinite(coeff):
            _fail(path, line, f"term {k} field coefficient: expected finite number, got {coeff!r}")
        terms.append(Term(tuple(idx), float(coeff)))
    meta = dict(doc.get("metadata") or {})
    for key in _HEADER_KEYS:
        if doc.get(key) is not None:
            meta[key] = doc[key]
    inst = HuboInstance(n_vars, tuple(terms), meta)
    report = validate_instance(inst)
    if report:
        _fail(path, 1, "invalid instance: " + "; ".join(report[:5]))
    counts = doc.get("term_counts")
    if counts is not None and {str(k): v for k, v in inst.term_counts().items()} != counts:
        _fail(path, 1, f"field term_counts: header {counts} does not match terms")
    return inst


def serialize_instance(instance: HuboInstance, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.write_text(dumps_instance(instance))
    return path


def deserialize_instance(path: str | os.PathLike) -> HuboInstance:
    path = Path(path)
    return loads_instance(path.read_text(), str(path))


def instance_id(instance: HuboInstance, fallback: str | None = None) -> str:
    return str(instance.metadata.get("name") or fallback or "instance")
