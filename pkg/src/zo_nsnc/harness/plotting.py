"""Convergence figures: stationarity metric and objective against sampled evaluations."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import AggregateReport, mean_curve  # noqa: E402

LABELS = {"vrg": "VRG-ZO", "vrsqn": "VRSQN-ZO"}


def _label(report: AggregateReport) -> str:
    return f"{LABELS.get(report.algo, report.algo)} ({report.gamma_kind}, a={report.a:g})"


def plot_metric(reports: list[AggregateReport], attr: str, ylabel: str, path, logy: bool = True):
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for rep in reports:
        x, y = mean_curve(rep, attr)
        if len(x) == 0:
            continue
        ax.plot(x, y, marker="o", markersize=2.5, linewidth=1.2, label=_label(rep))
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("sampled function evaluations")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_figures(reports: list[AggregateReport], directory, stem: str = "convergence") -> list[Path]:
    """Write ``<stem>_gradient.png`` and ``<stem>_objective.png`` into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    return [
        plot_metric(reports, "grad_metric", "mean stationarity metric", d / f"{stem}_gradient.png"),
        plot_metric(reports, "value", "mean objective value", d / f"{stem}_objective.png", logy=False),
    ]
