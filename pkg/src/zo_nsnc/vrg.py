"""Variance-reduced zeroth-order projected gradient method and the run metrics shared by both solvers."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import ConvexSet, infeasibility, moreau_indicator_grad, residual
from .problems import StochasticProblem
from .schedules import BatchSchedule, StepSchedule, pick_output_index, plan_iterations, window_start
from .smoothing import EvaluationCounter, smoothed_gradient, zo_grad_batch


def spawn_streams(seed) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (optimization, metrics, output-index) generators from one seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return tuple(np.random.default_rng(s) for s in ss.spawn(3))


def objective_value(problem: StochasticProblem, x, M: int, rng) -> float:
    """f(x) from the problem's oracle, else the mean of M sampled values."""
    v = problem.true_value(x)
    if v is not None:
        return float(v)
    xi = problem.sample(rng, M)
    return float(np.mean(problem.evaluate_batch(np.asarray(x, dtype=float)[None, :], xi)))


def measure_residual(problem, feasible_set: ConvexSet, x, eta: float, beta: float, M: int, rng,
                     counter=None) -> float:
    """|beta (x - P(x - g / beta))| with g the exact or M-sample smoothed gradient at x."""
    g = smoothed_gradient(problem, x, eta, M, rng, counter)
    return float(np.linalg.norm(residual(feasible_set, x, g, beta)))


def measure_h_gradient(problem, feasible_set: ConvexSet, x, eta: float, M: int, rng, counter=None) -> float:
    """|grad f_eta(x) + (x - P(x)) / eta|."""
    g = smoothed_gradient(problem, x, eta, M, rng, counter) + moreau_indicator_grad(feasible_set, x, eta)
    return float(np.linalg.norm(g))


def checkpoint_iterations(K: int, count: int = 50) -> list[int]:
    step = max(1, math.ceil(K / count)) if K > 0 else 1
    ks = list(range(0, K, step))
    if not ks or ks[-1] != K:
        ks.append(K)
    return ks


def resolve_x0(feasible_set: ConvexSet, n: int, x0) -> np.ndarray:
    if x0 is None:
        return np.asarray(feasible_set.center(n), dtype=float).copy()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({n},)")
    return x0.copy()


@dataclass
class Checkpoint:
    k: int
    gamma: float
    batch: int
    grad_metric: float  # residual norm (VRG) or |grad h_eta| (VRSQN)
    value: float
    evaluations: int
    wall_s: float
    infeas: float = 0.0


@dataclass
class RunReport:
    algo: str
    x_final: np.ndarray
    x_out: np.ndarray
    out_index: int
    K: int
    evaluations: int
    gammas: np.ndarray
    batches: np.ndarray
    checkpoints: list[Checkpoint]
    G_R: float  # squared stationarity metric at x_out
    G_K: float  # squared stationarity metric at x_final
    f_K: float
    infeas_K: float
    cpu_s: float
    kdamp: int = 0
    metric_evaluations: int = 0
    extras: dict = field(default_factory=dict)


@dataclass
class VrgConfig:
    eta: float = 0.1
    step: StepSchedule = field(default_factory=lambda: StepSchedule("constant", 0.01))
    batch: BatchSchedule = field(default_factory=BatchSchedule)
    budget: int | None = None
    max_iter: int | None = None
    window: float = 0.5
    beta: float | None = None  # residual scale; defaults to 1 / gamma_0
    metric_batch: int = 1000
    checkpoints: int = 50
    x0: np.ndarray | None = None
    keep_trajectory: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.budget is None and self.max_iter is None:
            raise ValueError("need a budget or max_iter")


def vrg_run(problem: StochasticProblem, feasible_set: ConvexSet, config: VrgConfig, seed=0) -> RunReport:
    """x_{k+1} = P(x_k - gamma_k * mean of N_k two-point estimates), then a gamma-weighted random output."""
    n = problem.dim
    eta = config.eta
    opt_rng, metric_rng, out_rng = spawn_streams(seed)
    if config.step.kind == "constant" and config.step.gamma0 >= eta / (math.sqrt(n) * problem.lipschitz_l0):
        warnings.warn("constant stepsize is at or above eta / (sqrt(n) L0); the rate guarantee does not apply",
                      stacklevel=2)

    batches = plan_iterations(config.batch, config.budget, 2, config.max_iter)
    K = len(batches)
    if K == 0:
        raise ValueError("budget does not cover a single iteration")
    gammas = config.step.values(K)
    beta = 1.0 / gammas[0] if config.beta is None else config.beta
    ck = set(checkpoint_iterations(K, config.checkpoints))

    counter = EvaluationCounter()
    metric_counter = EvaluationCounter()
    x = feasible_set.project(resolve_x0(feasible_set, n, config.x0))
    traj = np.empty((K + 1, n))
    traj[0] = x
    checkpoints = []
    t0 = time.process_time()
    wall0 = time.perf_counter()

    def record(k):
        checkpoints.append(Checkpoint(
            k, float(gammas[min(k, K - 1)]), int(batches[min(k, K - 1)]),
            measure_residual(problem, feasible_set, x, eta, beta, config.metric_batch, metric_rng, metric_counter),
            objective_value(problem, x, config.metric_batch, metric_rng),
            counter.count, time.perf_counter() - wall0, infeasibility(feasible_set, x)))

    for k in range(K):
        if k in ck:
            record(k)
        gb = zo_grad_batch(problem, x, eta, int(batches[k]), opt_rng, counter)
        x = feasible_set.project(x - gammas[k] * gb.mean_grad)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"non-finite iterate at k = {k + 1}: {x.tolist()}")
        traj[k + 1] = x
    cpu = time.process_time() - t0
    record(K)

    R = pick_output_index(gammas, window_start(K, config.window), K, out_rng)
    x_out = traj[R]
    G_R = measure_residual(problem, feasible_set, x_out, eta, beta, config.metric_batch, metric_rng, metric_counter)
    G_K = checkpoints[-1].grad_metric
    rep = RunReport(
        "vrg", x.copy(), x_out.copy(), R, K, counter.count, gammas, batches, checkpoints,
        G_R**2, G_K**2, checkpoints[-1].value, infeasibility(feasible_set, x), cpu,
        metric_evaluations=metric_counter.count)
    if config.keep_trajectory:
        rep.extras["trajectory"] = traj
    return rep
