"""Append-only result log: one self-describing JSON record per line."""
from __future__ import annotations

import json
import logging
import math
import os
import platform
import threading
from pathlib import Path
from typing import Iterable, Iterator

import numba
import numpy as np

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
LOG_NAME = "results.jsonl"
SUMMARY_NAME = "summary.json"
SPEC_NAME = "spec.json"

# wall-clock dependent fields; everything else in a record is a pure function
# of (spec, seed, worker count)
TIMING_KEYS = frozenset(
    {"timestamps", "overhead", "elapsed_total", "trace", "duration", "total", "solver_wall_s"}
)


def versions() -> dict:
    from hubobench import __version__

    return {
        "hubobench": __version__,
        "numpy": np.__version__,
        "numba": numba.__version__,
        "python": platform.python_version(),
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # JSON has no infinities; keep them readable and reversible
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return None
        return x
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dumps_record(record: dict) -> str:
    return json.dumps(_jsonable(record), sort_keys=True, allow_nan=False)


def to_float(x) -> float:
    """Inverse of the infinity encoding used in records and summaries."""
    if x is None:
        return math.nan
    if isinstance(x, str):
        return float(x)
    return float(x)


def canonical_record(record: dict) -> dict:
    """``record`` with every timing-dependent field removed (recursively)."""
    if isinstance(record, dict):
        return {k: canonical_record(v) for k, v in record.items() if k not in TIMING_KEYS}
    if isinstance(record, list):
        return [canonical_record(v) for v in record]
    return record


def record_key(record: dict) -> tuple[str, str, int]:
    return (record["instance_id"], record["solver"], int(record["trial"]))


class ResultLog:
    """Serialized appender over ``results.jsonl``.

    A record interrupted mid-write (no trailing newline) is dropped when the
    log is reopened, so a crashed run can be resumed cleanly.
    """

    def __init__(self, out_dir: str | os.PathLike):
        self.dir = Path(out_dir)
        self.path = self.dir / LOG_NAME
        self._lock = threading.Lock()

    def _repair_tail(self) -> None:
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        if data and not data.endswith(b"\n"):
            keep = data.rfind(b"\n") + 1
            log.warning("%s: dropping incomplete trailing record (%d bytes)",
                        self.path, len(data) - keep)
            with self.path.open("r+b") as fh:
                fh.truncate(keep)

    def append(self, record: dict) -> None:
        line = dumps_record(record) + "\n"
        with self._lock:
            self.dir.mkdir(parents=True, exist_ok=True)
            self._repair_tail()
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()

    def extend(self, records: Iterable[dict]) -> None:
        for r in records:
            self.append(r)

    def __iter__(self) -> Iterator[dict]:
        return iter(read_records(self.path))

    def completed(self) -> set[tuple[str, str, int]]:
        return {record_key(r) for r in self}


def read_records(path: str | os.PathLike) -> list[dict]:
    path = Path(path)
    if path.is_dir():
        path = path / LOG_NAME
    if not path.exists():
        return []
    out = []
    with path.open(encoding="utf-8") as fh:
        for k, line in enumerate(fh, 1):
            if not line.endswith("\n"):
                break
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{k}: malformed record: {exc}") from None
            if rec.get("schema_version") != SCHEMA_VERSION:
                raise ValueError(
                    f"{path}:{k}: unsupported schema_version {rec.get('schema_version')!r}"
                )
            out.append(rec)
    return out


def write_json_atomic(path: Path, doc: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")
    os.replace(tmp, path)
