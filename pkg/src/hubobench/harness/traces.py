"""Import of external solver traces.

Trace schema (CSV with a header row, or JSON lines), one row per reported
sample::

    solver, instance, trial, elapsed, energy[, spins]

``elapsed`` is seconds since the start of that trial; ``spins`` is an
optional string of '+'/'-' characters. Rows sharing (solver, instance,
trial) form one run whose best-so-far trace is built from them.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from hubobench.core import HuboInstance, evaluate_energy
from hubobench.harness.records import SCHEMA_VERSION, versions
from hubobench.solvers.base import parse_spin_string

REQUIRED = ("solver", "instance", "trial", "elapsed", "energy")
MISMATCH_TOL = 1e-9


class TraceSchemaError(ValueError):
    """Trace file does not follow the documented schema."""


def _rows(path: Path) -> list[tuple[int, dict]]:
    if path.suffix.lower() == ".csv":
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [f for f in REQUIRED if f not in (reader.fieldnames or [])]
            if missing:
                raise TraceSchemaError(f"{path}: header lacks required columns {missing}")
            return [(k, row) for k, row in enumerate(reader, 2)]
    rows = []
    with path.open() as fh:
        for k, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append((k, json.loads(line)))
            except json.JSONDecodeError as exc:
                raise TraceSchemaError(f"{path}:{k}: invalid JSON: {exc.msg}") from None
    return rows


def _parse_row(path, k, row) -> dict:
    if not isinstance(row, dict):
        raise TraceSchemaError(f"{path}:{k}: expected an object")
    for f in REQUIRED:
        if row.get(f) in (None, ""):
            raise TraceSchemaError(f"{path}:{k}: field {f!r} is missing")
    out = {"solver": str(row["solver"]), "instance": str(row["instance"])}
    try:
        out["trial"] = int(row["trial"])
    except (TypeError, ValueError):
        raise TraceSchemaError(f"{path}:{k}: field 'trial' must be an integer, got {row['trial']!r}") from None
    for f in ("elapsed", "energy"):
        try:
            out[f] = float(row[f])
        except (TypeError, ValueError):
            raise TraceSchemaError(f"{path}:{k}: field {f!r} must be a number, got {row[f]!r}") from None
        if not math.isfinite(out[f]):
            raise TraceSchemaError(f"{path}:{k}: field {f!r} must be finite")
    if out["elapsed"] < 0:
        raise TraceSchemaError(f"{path}:{k}: field 'elapsed' must be >= 0")
    spins = row.get("spins")
    if spins:
        try:
            out["spins"] = parse_spin_string(str(spins).strip())
        except ValueError as exc:
            raise TraceSchemaError(f"{path}:{k}: field 'spins': {exc}") from None
    return out


def energy_mismatch(claimed: float, actual: float, tol: float = MISMATCH_TOL) -> bool:
    return abs(claimed - actual) > tol * max(abs(actual), abs(claimed), 1e-300)


def import_trace(path, instances: dict[str, HuboInstance], label: str | None = None) -> list[dict]:
    """Records for every run in the trace file.

    Claimed energies of rows carrying spins are re-evaluated; a mismatch
    flags the record. Runs without any spins, or whose instance is not
    available, are marked ``unverifiable``.
    """
    path = Path(path)
    runs: dict[tuple[str, str, int], list[dict]] = {}
    for k, row in _rows(path):
        r = _parse_row(path, k, row)
        r["line"] = k
        runs.setdefault((label or r["solver"], r["instance"], r["trial"]), []).append(r)
    if not runs:
        raise TraceSchemaError(f"{path}: no rows")
    records = []
    for (solver, iid, trial), rows in runs.items():
        rows.sort(key=lambda r: r["elapsed"])
        inst = instances.get(iid)
        flags = []
        verified = False
        for r in rows:
            if "spins" not in r or inst is None:
                continue
            if r["spins"].shape[0] != inst.n_vars:
                raise TraceSchemaError(
                    f"{path}:{r['line']}: spins has length {r['spins'].shape[0]}, instance {iid!r} has N={inst.n_vars}"
                )
            actual = evaluate_energy(inst, r["spins"])
            verified = True
            if energy_mismatch(r["energy"], actual):
                flags.append(f"energy-mismatch:line{r['line']}:claimed={r['energy']!r}:actual={actual!r}")
        trace, best, best_row = [], math.inf, None
        for r in rows:
            if r["energy"] < best:
                best, best_row = r["energy"], r
                t = r["elapsed"]
                if trace and t <= trace[-1][0]:
                    t = math.nextafter(trace[-1][0], math.inf)
                trace.append([t, best])
        elapsed = rows[-1]["elapsed"]
        if trace and elapsed < trace[-1][0]:
            elapsed = trace[-1][0]
        spins = best_row.get("spins")
        payload = {
            "kind": "imported",
            "solver": solver,
            "best_energy": best,
            "best_config": None if spins is None else "".join("+" if s > 0 else "-" for s in spins),
            "trace": trace,
            "attempted_flips": 0,
            "accepted_flips": 0,
            "elapsed_total": elapsed,
        }
        records.append({
            "schema_version": SCHEMA_VERSION,
            "instance_id": iid,
            "solver": solver,
            "trial": trial,
            "seed": None,
            "provenance": "imported" if verified else "imported-unverifiable",
            "flags": flags,
            "instance": {"path": None, "family": None if inst is None else inst.metadata.get("family")},
            "config": {"variant": "IMPORTED", "source": str(path)},
            "payload": payload,
            "best_energy": best,
            "timestamps": {},
            "versions": versions(),
        })
    records.sort(key=lambda r: (r["instance_id"], r["solver"], r["trial"]))
    return records
