"""Damped limited-memory BFGS pieces: scaling, damping, curvature memory, two-loop recursion.

The inverse-Hessian approximation built from p stored pairs (s_j, ybar_j) is

    H_{k,0} = I / nu_k,
    H_{k,i} = V_j^T H_{k,i-1} V_j + rho_j s_j s_j^T,   V_j = I - rho_j ybar_j s_j^T,

with rho_j = 1 / (s_j^T ybar_j). ``two_loop`` applies H_k to a vector in O(pn);
``dense_inverse_hessian`` and ``dense_hessian`` build the matrices explicitly
for verification on small problems.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

# a step shorter than this (relative to 1 + |x|) does not produce a curvature pair
STEP_FLOOR = 1e-14


def compute_nu(s, y, delta: float) -> float:
    """max{y'y / (s'y + delta s's), delta}; delta when that denominator is not positive."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    ss = float(s @ s)
    if ss == 0.0:
        raise ValueError("degenerate step: s = 0")
    denom = float(s @ y) + delta * ss
    if denom <= 0.0:
        return float(delta)
    return max(float(y @ y) / denom, float(delta))


def damping_phi(s, y, nu_next: float) -> float:
    """Powell-style damping weight in (0, 1] using the next scaling nu_next."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    sBs = nu_next * float(s @ s)
    sy = float(s @ y)
    if sy < 0.25 * sBs:
        return 0.75 * sBs / (sBs - sy)
    return 1.0


def make_ybar(s, y, phi: float, nu_next: float) -> np.ndarray:
    return phi * np.asarray(y, dtype=float) + (1.0 - phi) * nu_next * np.asarray(s, dtype=float)


@dataclass(frozen=True)
class CurvatureTriple:
    s: np.ndarray
    y: np.ndarray
    ybar: np.ndarray
    nu: float  # scaling in force when the pair was damped
    phi: float = 1.0

    @property
    def sy(self) -> float:
        return float(self.s @ self.ybar)

    @property
    def rho(self) -> float:
        return 1.0 / self.sy


@dataclass
class PairUpdate:
    """What happened to the memory after one step."""

    accepted: bool
    nu: float
    phi: float = 1.0
    triple: CurvatureTriple | None = None

    @property
    def damped(self) -> bool:
        return self.accepted and self.phi < 1.0


class SqnMemory:
    """FIFO store of at most ``capacity`` curvature triples plus the current scaling nu."""

    def __init__(self, capacity: int, delta: float, nu: float | None = None):
        if capacity < 1:
            raise ValueError("memory capacity must be >= 1")
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.capacity = int(capacity)
        self.delta = float(delta)
        self.nu = float(delta if nu is None else nu)
        self.triples: deque[CurvatureTriple] = deque(maxlen=self.capacity)

    def __len__(self):
        return len(self.triples)

    def push(self, triple: CurvatureTriple) -> None:
        self.triples.append(triple)

    def update(self, s, y, x_norm: float = 0.0) -> PairUpdate:
        """Compute nu_next, damp y, and store the pair; tiny steps are skipped."""
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.linalg.norm(s) < STEP_FLOOR * (1.0 + x_norm):
            return PairUpdate(False, self.nu)
        nu_next = compute_nu(s, y, self.delta)
        phi = damping_phi(s, y, nu_next)
        triple = CurvatureTriple(s.copy(), y.copy(), make_ybar(s, y, phi, nu_next), nu_next, phi)
        self.nu = nu_next
        self.push(triple)
        return PairUpdate(True, nu_next, phi, triple)


def two_loop(memory: SqnMemory, g) -> np.ndarray:
    """H_k g by the two-loop recursion; g / nu for an empty memory."""
    q = np.array(g, dtype=float)
    triples = list(memory.triples)
    rhos = []
    for t in triples:
        sy = t.sy
        if not sy > 0.0:
            raise ValueError(f"stored pair violates the curvature condition (s'ybar = {sy})")
        rhos.append(1.0 / sy)
    alphas = [0.0] * len(triples)
    for i in range(len(triples) - 1, -1, -1):
        t = triples[i]
        alphas[i] = rhos[i] * float(t.s @ q)
        q -= alphas[i] * t.ybar
    r = q / memory.nu
    for i, t in enumerate(triples):
        beta = rhos[i] * float(t.ybar @ r)
        r += (alphas[i] - beta) * t.s
    return r


def dense_inverse_hessian(memory: SqnMemory, n: int) -> np.ndarray:
    """Explicit H_k from the product-form recursion (verification only)."""
    H = np.eye(n) / memory.nu
    I = np.eye(n)
    for t in memory.triples:
        rho = t.rho
        V = I - rho * np.outer(t.ybar, t.s)
        H = V.T @ H @ V + rho * np.outer(t.s, t.s)
    return H


def dense_hessian(memory: SqnMemory, n: int) -> np.ndarray:
    """Explicit B_k by the direct BFGS update from nu * I (verification only)."""
    B = np.eye(n) * memory.nu
    for t in memory.triples:
        Bs = B @ t.s
        B = B - np.outer(Bs, Bs) / float(t.s @ Bs) + np.outer(t.ybar, t.ybar) / t.sy
    return B


def smoothed_lipschitz(l0: float, n: int, eta: float) -> float:
    """Gradient Lipschitz constant (L0 sqrt(n) + 1) / eta of the doubly smoothed objective."""
    return (l0 * math.sqrt(n) + 1.0) / eta


def eigenvalue_bounds(eta: float, delta: float, p: int, l0: float, n: int) -> tuple[float, float]:
    """Lower and upper bounds on the spectrum of H_k for memory size p.

    p = 0 means no stored pairs; the upper bound then degenerates to 1.
    """
    if delta * eta**2 > 4.0:
        warnings.warn(f"delta * eta^2 = {delta * eta**2:g} > 4; eigenvalue bounds are not guaranteed", stacklevel=2)
    L = smoothed_lipschitz(l0, n, eta)
    lo = delta / (32.0 * (2.0 + delta) * (p + 1) * L**2)
    try:
        hi = (4 * p + 1) * (1.0 + 16.0 * L * math.sqrt(2.0 + delta) / delta) ** (2 * p)
    except OverflowError:
        hi = math.inf
    return lo, hi
