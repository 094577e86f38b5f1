"""Report files derived from a results directory (never written back to it
except under ``reports/``)."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from pathlib import Path

import numpy as np

from hubobench.harness.records import SUMMARY_NAME, read_records, to_float
from hubobench.metrics import closeness_curve, geometric_mean_tts

FORMATS = ("summary-table", "closeness-csv", "tts-scatter-csv")
REPORT_FILES = {
    "summary-table": "summary_table.csv",
    "closeness-csv": "closeness.csv",
    "tts-scatter-csv": "tts_scatter.csv",
}


def fmt(x) -> str:
    """17 significant digits; infinities as ``inf``, missing as empty."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def load_summary(results_dir) -> dict:
    path = Path(results_dir) / SUMMARY_NAME
    if not path.exists():
        raise FileNotFoundError(f"{path}: no summary; run bench first")
    summary = json.loads(path.read_text())
    if not summary.get("cells"):
        raise ValueError(f"{path}: summary has no result cells")
    return summary


def _family(cell) -> str:
    return cell.get("family") or "all"


def summary_table(summary: dict) -> list[dict]:
    """One row per (family, solver): finite TTS range, dagger count and
    geometric mean over finite values."""
    groups: dict[tuple[str, str], list[float]] = {}
    for c in summary["cells"]:
        groups.setdefault((_family(c), c["solver"]), []).append(to_float(c["tts"]))
    rows = []
    for (family, solver), tts in sorted(groups.items()):
        finite = [t for t in tts if math.isfinite(t)]
        gm, n_inf = geometric_mean_tts(tts)
        rows.append({
            "family": family,
            "solver": solver,
            "n_instances": len(tts),
            "tts_min": min(finite) if finite else None,
            "tts_max": max(finite) if finite else None,
            "dagger": n_inf,
            "tts_geomean": gm,
        })
    return rows


def render_summary_table(rows: list[dict]) -> str:
    header = ["family", "solver", "n_instances", "tts_min", "tts_max", "dagger", "tts_geomean"]
    return _csv(header, [
        [r["family"], r["solver"], r["n_instances"], fmt(r["tts_min"]), fmt(r["tts_max"]),
         r["dagger"], fmt(r["tts_geomean"])]
        for r in rows
    ])


def format_text_table(rows: list[dict]) -> str:
    lines = [f"{'family':<8} {'solver':<12} {'TTS min':>12} {'TTS max':>12} {'geomean':>12}"]
    for r in rows:
        name = r["solver"] + ("†" * (r["dagger"] > 0))
        cols = [r["tts_min"], r["tts_max"], r["tts_geomean"]]
        cells = " ".join(f"{'-' if v is None else format(v, '.4g'):>12}" for v in cols)
        lines.append(f"{r['family']:<8} {name:<12} {cells}")
    return "\n".join(lines)


def closeness_data(results_dir, summary: dict, n_points: int = 200):
    """Per (family, solver) closeness curves on a shared grid per family."""
    records = read_records(results_dir)
    targets = {k: to_float(v["e_target"]) for k, v in summary["targets"].items()}
    families = {c["instance_id"]: _family(c) for c in summary["cells"]}
    traces: dict[str, dict[str, dict[str, list]]] = {}
    for r in records:
        iid = r["instance_id"]
        if iid not in targets or not r["payload"].get("trace"):
            continue
        fam = families.get(iid, "all")
        tr = [(float(t), float(e)) for t, e in r["payload"]["trace"]]
        traces.setdefault(fam, {}).setdefault(r["solver"], {}).setdefault(iid, []).append(tr)
    out = {}
    for fam, by_solver in sorted(traces.items()):
        times = [p[0] for s in by_solver.values() for g in s.values() for tr in g for p in tr]
        lo = min(t for t in times if t > 0) if any(t > 0 for t in times) else 0.0
        hi = max(times)
        grid = np.geomspace(lo, hi, n_points) if 0 < lo < hi else np.array([hi])
        for solver, groups in sorted(by_solver.items()):
            curve = closeness_curve(groups, {k: targets[k] for k in groups}, grid)
            out[(fam, solver)] = curve
    return out


def render_closeness(curves) -> str:
    rows = []
    for (fam, solver), c in curves.items():
        for t, m, s, n in zip(c.grid, c.mean, c.sigma, c.count):
            rows.append([fam, solver, fmt(t), fmt(m), fmt(s), int(n)])
    return _csv(["family", "solver", "t", "mean", "sigma", "n_instances"], rows)


def tts_scatter(summary: dict) -> list[list]:
    rows = []
    by: dict[tuple[str, str], list[float]] = {}
    for c in sorted(summary["cells"], key=lambda c: (_family(c), c["solver"], c["instance_id"])):
        tts = to_float(c["tts"])
        rows.append([_family(c), c["instance_id"], c["solver"], fmt(tts), fmt(c["p_hit"]), "instance"])
        by.setdefault((_family(c), c["solver"]), []).append(tts)
    for (fam, solver), vals in sorted(by.items()):
        rows.append([fam, "", solver, fmt(statistics.median(vals)), "", "median"])
    return rows


def render_tts_scatter(summary: dict) -> str:
    return _csv(["family", "instance_id", "solver", "tts", "p_hit", "row"], tts_scatter(summary))


def write_report(results_dir, fmt_name: str, n_points: int = 200) -> Path:
    if fmt_name not in FORMATS:
        raise ValueError(f"unknown report format {fmt_name!r}; expected one of {FORMATS}")
    results_dir = Path(results_dir)
    summary = load_summary(results_dir)
    if fmt_name == "summary-table":
        text = render_summary_table(summary_table(summary))
    elif fmt_name == "closeness-csv":
        curves = closeness_data(results_dir, summary, n_points)
        if not curves:
            raise ValueError(f"{results_dir}: no traces to build closeness curves from")
        text = render_closeness(curves)
    else:
        text = render_tts_scatter(summary)
    out = results_dir / "reports"
    out.mkdir(exist_ok=True)
    path = out / REPORT_FILES[fmt_name]
    path.write_text(text, newline="")
    return path
