"""JSON/CSV report serialization and run comparison."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..drivers.common import IterationRecord, SolveReport, Status
from ..errors import MixedProblems

TRACE_FIELDS = ("k", "delta", "norm_g", "rho", "status", "evals", "f")
TOLERANCES = (1e-2, 1e-4, 1e-6)
MISSING = "\u2014"


def _num(v):
    if v is None:
        return None
    return float(v)


def trace_rows(trace) -> list[dict]:
    rows = []
    for r in trace:
        if isinstance(r, dict):
            rows.append({k: r.get(k) for k in TRACE_FIELDS})
            continue
        rows.append({"k": int(r.k), "delta": float(r.delta), "norm_g": _num(r.norm_g), "rho": _num(r.rho),
                     "status": Status(r.status).value, "evals": int(r.evals), "f": _num(r.f)})
    return rows


def report_to_dict(report: SolveReport, meta: dict | None = None, norm_grad: float | None = None) -> dict:
    meta = dict(meta or {})
    meta.setdefault("algo", report.algo)
    return {
        "meta": meta,
        "trace": trace_rows(report.trace),
        "result": {"x": [float(v) for v in np.asarray(report.x)], "f": _num(report.f),
                   "reason": report.reason.value if hasattr(report.reason, "value") else str(report.reason),
                   "evals": int(report.evals), "delta": float(report.delta), "norm_grad": _num(norm_grad)},
    }


def export_report(report: SolveReport | dict, path, fmt: str = "json", meta: dict | None = None,
                  norm_grad: float | None = None) -> None:
    """Write a report as JSON (meta, trace and result) or as a CSV trace table."""
    data = report if isinstance(report, dict) else report_to_dict(report, meta, norm_grad)
    path = Path(path)
    try:
        if fmt == "json":
            path.write_text(json.dumps(data, sort_keys=True, indent=1) + "\n")
        elif fmt == "csv":
            with path.open("w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=TRACE_FIELDS)
                w.writeheader()
                for row in data["trace"]:
                    w.writerow({k: ("" if row[k] is None else repr(row[k]) if isinstance(row[k], float) else row[k])
                                for k in TRACE_FIELDS})
        else:
            raise ValueError(f"unknown report format {fmt!r}; use json or csv")
    except OSError as exc:
        raise OSError(f"could not write report to {path}: {exc}") from exc


def _parse_csv_row(row: dict) -> dict:
    def num(v):
        return None if v == "" else float(v)

    return {"k": int(row["k"]), "delta": float(row["delta"]), "norm_g": num(row["norm_g"]),
            "rho": num(row["rho"]), "status": row["status"], "evals": int(row["evals"]), "f": num(row["f"])}


def load_report(path) -> dict:
    """Load a JSON report, or a CSV trace as ``{"trace": [...]}``."""
    path = Path(path)
    try:
        if path.suffix == ".csv":
            with path.open(newline="") as fh:
                return {"trace": [_parse_csv_row(r) for r in csv.DictReader(fh)]}
        return json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"could not read report {path}: {exc}") from exc


def records_from_rows(rows) -> list[IterationRecord]:
    return [IterationRecord(r["k"], None, r["delta"], r["norm_g"], Status(r["status"]), r["evals"],
                            rho=r["rho"], f=r["f"]) for r in rows]


def evals_to_tolerance(rows, tol: float, f_min: float = 0.0):
    """Evaluations used when the best value so far first comes within ``tol`` of ``f_min``."""
    best = np.inf
    for r in rows:
        if r["f"] is not None:
            best = min(best, r["f"])
        if best - f_min <= tol:
            return r["evals"]
    return None


def compare_runs(reports, f_min: float | None = None, tolerances=TOLERANCES) -> list[dict]:
    """Evaluations-to-tolerance on the best value so far, one row per report.

    ``f_min`` defaults to the registered optimal value of the shared problem (0 if unknown).
    """
    reports = [r if isinstance(r, dict) else report_to_dict(r) for r in reports]
    names = {r.get("meta", {}).get("problem") for r in reports}
    if len(names) > 1:
        raise MixedProblems(f"reports refer to different problems: {sorted(map(str, names))}")
    if f_min is None:
        f_min = 0.0
        name = next(iter(names), None)
        if name is not None:
            from .problems import PROBLEMS, get_problem
            if name in PROBLEMS and get_problem(name).f_min is not None:
                f_min = get_problem(name).f_min
    out = []
    for r in reports:
        meta = r.get("meta", {})
        row = {"algo": meta.get("algo", "?"), "seed": meta.get("seed")}
        for tol in tolerances:
            e = evals_to_tolerance(r["trace"], tol, f_min)
            row[f"{tol:g}"] = MISSING if e is None else e
        out.append(row)
    return out


def format_table(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    width = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    lines = ["  ".join(c.ljust(width[c]) for c in cols)]
    lines += ["  ".join(str(r[c]).ljust(width[c]) for c in cols) for r in rows]
    return "\n".join(lines)
