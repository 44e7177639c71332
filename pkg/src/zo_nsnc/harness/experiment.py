"""Replicated runs, aggregation across replications, and side-by-side comparisons."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..problems import classification_metrics
from ..vrg import RunReport, vrg_run
from ..vrsqn import vrsqn_run
from .config import ConfigError, build_problem, build_solver_config, resolve

METRICS = ("G_R", "G_K", "f_K", "infeas_K", "kdamp", "K", "evals", "cpu_s", "accuracy", "precision", "recall")


@dataclass
class ExperimentSpec:
    config: dict  # resolved configuration

    @classmethod
    def from_raw(cls, raw: dict) -> "ExperimentSpec":
        return cls(resolve(raw))

    @property
    def algo(self) -> str:
        return self.config["algo"]

    def seeds(self) -> list[int]:
        return [self.config["seed"] + r for r in range(self.config["reps"])]


@dataclass
class ReplicationResult:
    replication: int
    seed: int
    report: RunReport | None = None
    metrics: dict = field(default_factory=dict)
    error: str | None = None


def run_replication(config: dict, replication: int) -> ReplicationResult:
    seed = config["seed"] + replication
    bundle = build_problem(config)
    solver_cfg = build_solver_config(config, bundle)
    run = vrg_run if config["algo"] == "vrg" else vrsqn_run
    try:
        rep = run(bundle.problem, bundle.feasible_set, solver_cfg, seed)
    except (FloatingPointError, ValueError) as exc:
        return ReplicationResult(replication, seed, error=f"{type(exc).__name__}: {exc}")
    metrics = {
        "G_R": rep.G_R, "G_K": rep.G_K, "f_K": rep.f_K, "infeas_K": rep.infeas_K,
        "kdamp": float(rep.kdamp), "K": float(rep.K), "evals": float(rep.evaluations), "cpu_s": rep.cpu_s,
    }
    if bundle.test_data is not None:
        metrics.update(classification_metrics(bundle.test_data, rep.x_final))
    return ReplicationResult(replication, seed, rep, metrics)


def _mean_se(values: list[float]) -> tuple[float, float]:
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        return math.nan, math.nan
    # fsum is exactly rounded, so the result does not depend on replication order
    m = math.fsum(vals) / len(vals)
    if len(vals) < 2:
        return m, math.nan
    var = math.fsum((v - m) ** 2 for v in vals) / (len(vals) - 1)
    return m, math.sqrt(var / len(vals))


@dataclass
class AggregateReport:
    algo: str
    gamma_kind: str
    a: float
    reps: int
    mean: dict
    se: dict
    results: list[ReplicationResult]

    @property
    def failed(self) -> list[ReplicationResult]:
        return [r for r in self.results if r.error is not None]

    @property
    def ok(self) -> list[ReplicationResult]:
        return [r for r in self.results if r.error is None]


def aggregate(config: dict, results: list[ReplicationResult]) -> AggregateReport:
    results = sorted(results, key=lambda r: r.replication)
    ok = [r for r in results if r.error is None]
    mean, se = {}, {}
    for name in METRICS:
        vals = [r.metrics[name] for r in ok if name in r.metrics]
        mean[name], se[name] = _mean_se(vals) if vals else (math.nan, math.nan)
    return AggregateReport(config["algo"], config["step.kind"], float(config["batch.a"]), len(results),
                           mean, se, results)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> AggregateReport:
    cfg = spec.config
    # fail fast on configuration problems before spawning workers
    build_solver_config(cfg, build_problem(cfg))
    reps = range(cfg["reps"])
    if jobs <= 1 or cfg["reps"] == 1:
        results = [run_replication(cfg, r) for r in reps]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_replication, [cfg] * cfg["reps"], reps))
    return aggregate(cfg, results)


BUDGET_KEYS = ("budget", "K")
PROBLEM_KEYS = ("problem", "n", "S", "lambda", "informative_frac", "class_sep", "data_seed", "minquad.radius",
                "set", "box.lower", "box.upper", "ball.center", "ball.radius")


def check_comparable(a: dict, b: dict) -> None:
    for key in BUDGET_KEYS:
        if a[key] != b[key]:
            raise ConfigError(f"compared runs must share {key}: {a[key]!r} vs {b[key]!r}")
    for key in PROBLEM_KEYS:
        if a[key] != b[key]:
            raise ConfigError(f"compared runs must share {key}: {a[key]!r} vs {b[key]!r}")


def ratios(first: AggregateReport, second: AggregateReport) -> dict:
    out = {}
    for name in METRICS:
        x, y = first.mean[name], second.mean[name]
        if x == y:
            out[name] = 1.0
        elif y == 0.0 or math.isnan(y) or math.isnan(x):
            out[name] = math.nan
        else:
            out[name] = x / y
    return out


def compare(spec_a: ExperimentSpec, spec_b: ExperimentSpec, jobs: int = 1):
    """Both experiments under one budget, plus per-metric ratios first / second."""
    check_comparable(spec_a.config, spec_b.config)
    ra = run_experiment(spec_a, jobs)
    rb = run_experiment(spec_b, jobs)
    return ra, rb, ratios(ra, rb)


def bench(base: dict, gamma_kinds, a_values, jobs: int = 1) -> list[AggregateReport]:
    """One aggregate per (stepsize kind, batch slope) cell."""
    out = []
    for kind in gamma_kinds:
        for a in a_values:
            raw = dict(base)
            raw["step.kind"] = kind
            raw["batch.a"] = a
            out.append(run_experiment(ExperimentSpec.from_raw(raw), jobs))
    return out


def format_failure(result: ReplicationResult) -> str:
    return f"replication {result.replication} (seed {result.seed}) failed: {result.error}"


def convergence_rows(report: AggregateReport):
    """Long-format (algo, replication, k, evaluations, metric, value) rows."""
    for res in report.ok:
        for c in res.report.checkpoints:
            for metric, value in (("grad_metric", c.grad_metric), ("value", c.value), ("infeas", c.infeas)):
                yield (report.algo, res.replication, c.k, c.evaluations, metric, value)


def mean_curve(report: AggregateReport, attr: str):
    """Evaluations and mean checkpoint metric across successful replications."""
    ok = report.ok
    if not ok:
        return np.zeros(0), np.zeros(0)
    evals = np.array([c.evaluations for c in ok[0].report.checkpoints], dtype=float)
    vals = np.array([[getattr(c, attr) for c in r.report.checkpoints] for r in ok], dtype=float)
    return evals, vals.mean(axis=0)
