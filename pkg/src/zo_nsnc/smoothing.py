"""Sphere sampling and zeroth-order gradient estimators of ball-smoothed objectives.

For a radius ``eta`` the smoothed function is f_eta(x) = E[f(x + eta u)] with
u uniform in the unit ball. Its gradient equals

    (n / (2 eta)) E[(f(x + v) - f(x - v)) v / |v|],   v uniform on eta * S^{n-1},

so every (v, xi) pair costs two sampled function values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ConvexSet, moreau_indicator_grad
from .problems import StochasticProblem


class EvaluationCounter:
    """Running count of sampled function evaluations."""

    def __init__(self, count: int = 0):
        self.count = int(count)

    def add(self, k: int) -> None:
        self.count += int(k)

    def __repr__(self):
        return f"EvaluationCounter({self.count})"


def sample_sphere(rng: np.random.Generator, n: int, eta: float, size: int | None = None):
    """Uniform draw(s) from the sphere of radius ``eta`` in R^n.

    Returns shape (n,) when ``size`` is None, else (size, n).
    """
    if n < 1 or not eta > 0:
        raise ValueError("need n >= 1 and eta > 0")
    m = 1 if size is None else int(size)
    g = rng.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=1)
    # a zero Gaussian vector has probability zero but would divide by zero
    while np.any(norms == 0.0):
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(g, axis=1)
    v = eta * g / norms[:, None]
    return v[0] if size is None else v


def sample_ball(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """Uniform draws from the unit ball (direction times U^(1/n))."""
    d = sample_sphere(rng, n, 1.0, size)
    return d * rng.uniform(size=size)[:, None] ** (1.0 / n)


def _per_sample(problem, x, V, xi, eta, counter):
    x = np.asarray(x, dtype=float)
    V = np.atleast_2d(V)
    n = problem.dim
    fp = problem.evaluate_batch(x + V, xi)
    fm = problem.evaluate_batch(x - V, xi)
    if counter is not None:
        counter.add(2 * V.shape[0])
    if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
        raise FloatingPointError(f"non-finite function value near x = {x.tolist()}")
    norms = np.linalg.norm(V, axis=1)
    coef = (n / (2.0 * eta)) * (fp - fm) / norms
    return coef[:, None] * V


def zo_grad_sample(problem: StochasticProblem, x, v, xi, eta: float, counter=None) -> np.ndarray:
    """Single central-difference estimate for one sphere point ``v``."""
    return _per_sample(problem, x, np.asarray(v, dtype=float)[None, :], np.atleast_1d(xi), eta, counter)[0]


def zo_grad_samples(problem, x, V, xi, eta, counter=None) -> np.ndarray:
    """Per-sample estimates, one row per (v, xi) pair."""
    return _per_sample(problem, x, V, xi, eta, counter)


@dataclass
class GradBatch:
    """A mini-batch of (v, xi) pairs and the mean estimate at the point it was drawn for."""

    directions: np.ndarray
    realizations: np.ndarray
    mean_grad: np.ndarray

    @property
    def batch_size(self) -> int:
        return self.directions.shape[0]


def draw_batch(problem: StochasticProblem, eta: float, N: int, rng):
    if N < 1:
        raise ValueError(f"batch size must be >= 1, got {N}")
    V = sample_sphere(rng, problem.dim, eta, N)
    xi = np.asarray(problem.sample(rng, N))
    return V, xi


def zo_grad_batch(problem: StochasticProblem, x, eta: float, N: int, rng, counter=None) -> GradBatch:
    V, xi = draw_batch(problem, eta, N, rng)
    per = _per_sample(problem, x, V, xi, eta, counter)
    return GradBatch(V, xi, per.mean(axis=0))


def zo_grad_sqn(
    problem: StochasticProblem,
    feasible_set: ConvexSet,
    x,
    eta: float,
    batch: GradBatch | None = None,
    N: int | None = None,
    rng=None,
    counter=None,
) -> tuple[np.ndarray, GradBatch]:
    """Estimate of grad f_eta(x) + (x - P(x)) / eta.

    Passing a recorded ``batch`` reuses its (v, xi) pairs at the new ``x``
    (full overlap); otherwise a fresh batch of size ``N`` is drawn from ``rng``.
    The returned batch carries the pairs used and the mean at ``x``.
    """
    if batch is None:
        if N is None or rng is None:
            raise ValueError("need either a recorded batch or (N, rng)")
        V, xi = draw_batch(problem, eta, N, rng)
    else:
        V, xi = batch.directions, batch.realizations
    per = _per_sample(problem, x, V, xi, eta, counter)
    g = per.mean(axis=0) + moreau_indicator_grad(feasible_set, x, eta)
    return g, GradBatch(V, xi, g)


def estimate_smoothed_value(problem: StochasticProblem, x, eta: float, M: int, rng, counter=None) -> float:
    """Monte Carlo mean of F(x + eta u, xi), u uniform in the unit ball."""
    if M < 1:
        raise ValueError("M must be >= 1")
    x = np.asarray(x, dtype=float)
    U = sample_ball(rng, problem.dim, M)
    xi = problem.sample(rng, M)
    vals = problem.evaluate_batch(x + eta * U, xi)
    if counter is not None:
        counter.add(M)
    return float(np.mean(vals))


def smoothed_gradient(problem: StochasticProblem, x, eta: float, M: int, rng, counter=None) -> np.ndarray:
    """grad f_eta(x) from the problem's closed form when it has one, else an M-sample estimate."""
    g = problem.smoothed_grad(x, eta)
    if g is not None:
        return g
    return zo_grad_batch(problem, x, eta, M, rng, counter).mean_grad
