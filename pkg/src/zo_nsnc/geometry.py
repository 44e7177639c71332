"""Closed convex feasible sets and the stationarity measures built on them."""

from __future__ import annotations

import numpy as np


class ConvexSet:
    """Nonempty closed convex set with a Euclidean projection."""

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def center(self, n: int) -> np.ndarray:
        """Default starting point: the set's center, or the projection of 0."""
        return self.project(np.zeros(n))

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError


class WholeSpace(ConvexSet):
    def project(self, x):
        return np.array(x, dtype=float)

    def sample_uniform(self, rng, n):
        raise ValueError("cannot sample uniformly from R^n")

    def __repr__(self):
        return "WholeSpace()"


class Box(ConvexSet):
    """{x : lower <= x <= upper}; scalar bounds broadcast against x."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if np.any(self.lower > self.upper):
            raise ValueError("box requires lower <= upper componentwise")

    @classmethod
    def cube(cls, n: int, width: float, center: float = 0.0) -> "Box":
        half = 0.5 * width
        return cls(np.full(n, center - half), np.full(n, center + half))

    def project(self, x):
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def center(self, n):
        return np.broadcast_to(0.5 * (self.lower + self.upper), (n,)).astype(float)

    def sample_uniform(self, rng, n):
        lo = np.broadcast_to(self.lower, (n,))
        hi = np.broadcast_to(self.upper, (n,))
        return rng.uniform(lo, hi)

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class Ball(ConvexSet):
    def __init__(self, center, radius: float):
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        self._center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def project(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self._center
        r = np.linalg.norm(d)
        # rounding slack so that an already projected point is returned unchanged
        slack = 8.0 * np.finfo(float).eps * (self.radius + np.linalg.norm(self._center))
        if r <= self.radius + slack:
            return x.copy()
        return self._center + d * (self.radius / r)

    def center(self, n):
        return np.broadcast_to(self._center, (n,)).astype(float)

    def sample_uniform(self, rng, n):
        g = rng.standard_normal(n)
        g /= np.linalg.norm(g)
        return self.center(n) + self.radius * rng.uniform() ** (1.0 / n) * g

    def __repr__(self):
        return f"Ball(center={self._center.tolist()}, radius={self.radius})"


def project(feasible_set: ConvexSet, x) -> np.ndarray:
    return feasible_set.project(x)


def moreau_indicator_grad(feasible_set: ConvexSet, x, eta: float) -> np.ndarray:
    """Gradient (x - P(x)) / eta of the Moreau envelope of the indicator."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    x = np.asarray(x, dtype=float)
    return (x - feasible_set.project(x)) / eta


def residual(feasible_set: ConvexSet, x, g, beta: float) -> np.ndarray:
    """beta * (x - P(x - g / beta)).

    With g the exact smoothed gradient this is the stationarity residual of
    the smoothed constrained problem; with a noisy g it is its inexact
    counterpart.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    x = np.asarray(x, dtype=float)
    return beta * (x - feasible_set.project(x - np.asarray(g, dtype=float) / beta))


def infeasibility(feasible_set: ConvexSet, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - feasible_set.project(x)))
