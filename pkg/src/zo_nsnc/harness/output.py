"""CSV emission for aggregate tables and long-format convergence histories."""

from __future__ import annotations

import csv

from .experiment import AggregateReport, convergence_rows

TABLE_COLUMNS = ("gamma_kind", "a", "G_R", "G_K", "f_K", "cpu_s", "infeas_K", "kdamp", "K", "evals",
                 "algo", "reps", "failed", "G_R_se", "G_K_se", "f_K_se", "infeas_K_se",
                 "accuracy", "precision", "recall")
HISTORY_COLUMNS = ("algo", "replication", "k", "evaluations", "metric", "value")


def fmt(value) -> str:
    """Shortest round-trip text for floats; plain str otherwise."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def table_row(report: AggregateReport, label: str | None = None) -> dict:
    row = {"gamma_kind": report.gamma_kind, "a": report.a, "algo": label or report.algo, "reps": report.reps,
           "failed": len(report.failed)}
    for name in ("G_R", "G_K", "f_K", "cpu_s", "infeas_K", "kdamp", "K", "evals", "accuracy", "precision", "recall"):
        row[name] = report.mean[name]
    for name in ("G_R", "G_K", "f_K", "infeas_K"):
        row[name + "_se"] = report.se[name]
    return row


def ratio_row(first: AggregateReport, second: AggregateReport, ratios: dict) -> dict:
    row = {c: "" for c in TABLE_COLUMNS}
    row.update({"gamma_kind": first.gamma_kind, "a": first.a, "algo": f"{first.algo}/{second.algo}",
                "reps": first.reps, "failed": len(first.failed) + len(second.failed)})
    for name, value in ratios.items():
        if name in row:
            row[name] = value
    return row


def write_table(path_or_file, rows: list[dict]) -> None:
    """Header plus one row per entry of ``rows``; accepts a path or an open text file."""
    if hasattr(path_or_file, "write"):
        _write_rows(path_or_file, rows)
        return
    with open(path_or_file, "w", newline="") as fh:
        _write_rows(fh, rows)


def _write_rows(fh, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for row in rows:
        w.writerow([fmt(row.get(c, "")) for c in TABLE_COLUMNS])


def write_history(path, reports: list[AggregateReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for report in reports:
            for row in convergence_rows(report):
                w.writerow([fmt(v) for v in row])
