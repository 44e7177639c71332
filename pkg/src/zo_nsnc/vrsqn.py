"""Variance-reduced zeroth-order damped L-BFGS on the Moreau-smoothed unconstrained reformulation.

The solver minimizes h_eta(x) = f_eta(x) + dist(x, X)^2 / (2 eta) without
projecting, so iterates may leave X; their distance to X is tracked.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import ConvexSet, infeasibility
from .problems import StochasticProblem
from .schedules import BatchSchedule, StepSchedule, pick_output_index_full, plan_iterations
from .smoothing import EvaluationCounter, zo_grad_sqn
from .sqn_core import PairUpdate, SqnMemory, two_loop
from .vrg import (Checkpoint, RunReport, checkpoint_iterations, measure_h_gradient, objective_value,
                  resolve_x0, spawn_streams)

COLD_STARTS = ("scaled", "raw")


@dataclass
class IterationInfo:
    """Handed to the ``on_iteration`` hook after each step."""

    k: int
    x: np.ndarray
    x_next: np.ndarray
    s: np.ndarray
    y: np.ndarray
    update: PairUpdate
    memory: SqnMemory


@dataclass
class VrsqnConfig:
    eta: float = 0.1
    delta: float | None = None  # defaults to n L0^2 / eta^2
    memory: int = 5
    step: StepSchedule = field(default_factory=lambda: StepSchedule("constant", 0.01))
    batch: BatchSchedule = field(default_factory=BatchSchedule)
    budget: int | None = None
    max_iter: int | None = None
    cold_start: str = "scaled"
    metric_batch: int = 1000
    checkpoints: int = 50
    x0: np.ndarray | None = None
    keep_trajectory: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.cold_start not in COLD_STARTS:
            raise ValueError(f"cold_start must be one of {COLD_STARTS}")
        if self.budget is None and self.max_iter is None:
            raise ValueError("need a budget or max_iter")

    def resolved_delta(self, n: int, l0: float) -> float:
        return n * l0**2 / self.eta**2 if self.delta is None else self.delta


def vrsqn_run(problem: StochasticProblem, feasible_set: ConvexSet, config: VrsqnConfig, seed=0,
              on_iteration: Callable[[IterationInfo], None] | None = None) -> RunReport:
    """Run the damped L-BFGS scheme with full-overlap gradient differences.

    Each iteration draws N_k fresh (v, xi) pairs, estimates grad h_eta at x_k,
    steps along the two-loop direction (a scaled gradient while k < memory),
    and re-evaluates the same pairs at x_{k+1} to form y_k; 4 N_k evaluations.
    """
    n = problem.dim
    eta = config.eta
    delta = config.resolved_delta(n, problem.lipschitz_l0)
    if delta * eta**2 > 4.0:
        warnings.warn(f"delta * eta^2 = {delta * eta**2:g} exceeds 4; eigenvalue bounds are not guaranteed",
                      stacklevel=2)
    opt_rng, metric_rng, out_rng = spawn_streams(seed)

    batches = plan_iterations(config.batch, config.budget, 4, config.max_iter)
    K = len(batches)
    if K == 0:
        raise ValueError("budget does not cover a single iteration")
    gammas = config.step.values(K)
    ck = set(checkpoint_iterations(K, config.checkpoints))

    memory = SqnMemory(config.memory, delta)
    counter = EvaluationCounter()
    metric_counter = EvaluationCounter()
    x = resolve_x0(feasible_set, n, config.x0)
    traj = np.empty((K + 1, n))
    traj[0] = x
    kdamp = 0
    checkpoints = []
    t0 = time.process_time()
    wall0 = time.perf_counter()

    def record(k):
        checkpoints.append(Checkpoint(
            k, float(gammas[min(k, K - 1)]), int(batches[min(k, K - 1)]),
            measure_h_gradient(problem, feasible_set, x, eta, config.metric_batch, metric_rng, metric_counter),
            objective_value(problem, x, config.metric_batch, metric_rng),
            counter.count, time.perf_counter() - wall0, infeasibility(feasible_set, x)))

    for k in range(K):
        if k in ck:
            record(k)
        g_bar, used = zo_grad_sqn(problem, feasible_set, x, eta, N=int(batches[k]), rng=opt_rng, counter=counter)
        if k >= config.memory:
            r = two_loop(memory, g_bar)
        elif config.cold_start == "scaled":
            r = g_bar / memory.nu
        else:
            r = g_bar
        x_next = x - gammas[k] * r
        if not np.all(np.isfinite(x_next)):
            raise FloatingPointError(f"non-finite iterate at k = {k + 1}; last finite x = {x.tolist()}")
        g_hat, _ = zo_grad_sqn(problem, feasible_set, x_next, eta, batch=used, counter=counter)
        s = x_next - x
        y = g_hat - g_bar
        upd = memory.update(s, y, float(np.linalg.norm(x_next)))
        if upd.damped:
            kdamp += 1
        if on_iteration is not None:
            on_iteration(IterationInfo(k, x, x_next, s, y, upd, memory))
        x = x_next
        traj[k + 1] = x
    cpu = time.process_time() - t0
    record(K)

    R = pick_output_index_full(gammas, K, out_rng)
    x_out = traj[R]
    G_R = measure_h_gradient(problem, feasible_set, x_out, eta, config.metric_batch, metric_rng, metric_counter)
    G_K = checkpoints[-1].grad_metric
    rep = RunReport(
        "vrsqn", x.copy(), x_out.copy(), R, K, counter.count, gammas, batches, checkpoints,
        G_R**2, G_K**2, checkpoints[-1].value, infeasibility(feasible_set, x), cpu, kdamp=kdamp,
        metric_evaluations=metric_counter.count)
    rep.extras["delta"] = delta
    if config.keep_trajectory:
        rep.extras["trajectory"] = traj
    return rep


def infeasibility_bound(n: int, l0: float, eta: float, eps: float = 0.0) -> float:
    """Distance bound eta (eps + 4 (2 pi)^(1/4) sqrt(n) L0) for a point with |grad h_eta| <= eps."""
    return eta * (eps + 4.0 * (2.0 * math.pi) ** 0.25 * math.sqrt(n) * l0)
