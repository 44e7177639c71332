"""Stepsize sequences, mini-batch sequences, iteration planning and the random output index."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .sqn_core import eigenvalue_bounds, smoothed_lipschitz

STEP_KINDS = ("constant", "diminishing", "sqrt_decay", "linear_decay")
BATCH_KINDS = ("linear", "sqrt", "poly", "affine", "constant")


@dataclass(frozen=True)
class StepSchedule:
    """gamma_k for k = 0, 1, ...

    constant      gamma0
    diminishing   gamma0 / sqrt(k + 1)
    sqrt_decay    gamma0 / (1 + sqrt(k + 1) / scale)
    linear_decay  gamma0 / (1 + (k + 1) / scale)
    """

    kind: str = "constant"
    gamma0: float = 0.01
    scale: float = 100.0

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ValueError(f"unknown step kind {self.kind!r}; expected one of {STEP_KINDS}")
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def values(self, K: int) -> np.ndarray:
        k1 = np.arange(1, K + 1, dtype=float)
        if self.kind == "constant":
            return np.full(K, self.gamma0)
        if self.kind == "diminishing":
            return self.gamma0 / np.sqrt(k1)
        if self.kind == "sqrt_decay":
            return self.gamma0 / (1.0 + np.sqrt(k1) / self.scale)
        return self.gamma0 / (1.0 + k1 / self.scale)

    def value(self, k: int) -> float:
        return float(self.values(k + 1)[k])


@dataclass(frozen=True)
class BatchSchedule:
    """N_k for k = 0, 1, ..., clipped to [1, cap].

    linear    ceil(a sqrt(n) L0 (k + 1))
    sqrt      ceil(a sqrt(n) L0 sqrt(k + 1))
    poly      ceil(c (k + 1)^(1 + b))
    affine    ceil(2 + a k)
    constant  size
    """

    kind: str = "affine"
    a: float = 1.0
    b: float = 0.0
    c: float = 1.0
    n: int = 1
    l0: float = 1.0
    size: int = 1
    cap: int | None = None

    def __post_init__(self):
        if self.kind not in BATCH_KINDS:
            raise ValueError(f"unknown batch kind {self.kind!r}; expected one of {BATCH_KINDS}")
        if self.kind == "constant" and self.size < 1:
            raise ValueError("constant batch size must be >= 1")
        if self.cap is not None and self.cap < 1:
            raise ValueError("batch cap must be >= 1")

    def values(self, K: int, start: int = 0) -> np.ndarray:
        k = np.arange(start, start + K, dtype=float)
        root = math.sqrt(self.n) * self.l0
        if self.kind == "linear":
            raw = self.a * root * (k + 1)
        elif self.kind == "sqrt":
            raw = self.a * root * np.sqrt(k + 1)
        elif self.kind == "poly":
            raw = self.c * (k + 1) ** (1.0 + self.b)
        elif self.kind == "affine":
            raw = 2.0 + self.a * k
        else:
            raw = np.full(K, float(self.size))
        # tiny tolerance so that e.g. 0.01 * 100 does not round up past 1
        N = np.ceil(raw - 1e-9 * np.maximum(1.0, raw))
        N = np.maximum(N, 1.0)
        if self.cap is not None:
            N = np.minimum(N, self.cap)
        return N.astype(np.int64)

    def value(self, k: int) -> int:
        return int(self.values(1, start=k)[0])


def constant_rate_schedules(n: int, l0: float, eta: float, a: float = 1.0):
    """Constant step eta / (2 sqrt(n) L0) with linearly growing batches."""
    step = StepSchedule("constant", eta / (2.0 * math.sqrt(n) * l0))
    return step, BatchSchedule("linear", a=a, n=n, l0=l0)


def diminishing_rate_schedules(n: int, l0: float, eta: float, gamma0: float | None = None, a: float = 1.0):
    """gamma0 / sqrt(k + 1) with batches growing like sqrt(k + 1)."""
    if gamma0 is None:
        gamma0 = eta / (2.0 * math.sqrt(n) * l0)
    return StepSchedule("diminishing", gamma0), BatchSchedule("sqrt", a=a, n=n, l0=l0)


def sqn_poly_batch(n: int, l0: float, eta: float, b: float, a: float = 1.0) -> BatchSchedule:
    """ceil(a n L0 eta^3 (k + 1)^(1 + b))."""
    if not b > 0:
        raise ValueError("b must be positive")
    return BatchSchedule("poly", b=b, c=a * n * l0 * eta**3, n=n, l0=l0)


def plan_iterations(batch: BatchSchedule, budget: int | None, evals_per_sample: int,
                    max_iter: int | None = None, chunk: int = 4096) -> np.ndarray:
    """Batch sizes of every iteration that fits.

    Iteration k costs ``evals_per_sample * N_k`` evaluations; iterations are
    taken while the running total stays within ``budget``. At least one of
    ``budget`` and ``max_iter`` must be given.
    """
    if budget is None and max_iter is None:
        raise ValueError("need a budget or an iteration count")
    if max_iter is not None and budget is None:
        return batch.values(int(max_iter))
    out = []
    used = 0
    k = 0
    while True:
        m = chunk if max_iter is None else min(chunk, max_iter - k)
        if m <= 0:
            break
        N = batch.values(m, start=k)
        total = used + evals_per_sample * np.cumsum(N)
        fits = int(np.searchsorted(total, budget, side="right"))
        out.append(N[:fits])
        if fits < m:
            break
        used = int(total[-1])
        k += m
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def window_start(K: int, lam: float) -> int:
    """ceil(lam K), capped so the window {start, ..., K-1} is never empty."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("window fraction must be in [0, 1)")
    return min(int(math.ceil(lam * K - 1e-12)), K - 1)


def pick_output_index(gammas, start: int, stop: int, rng: np.random.Generator) -> int:
    """Index in {start, ..., stop-1} drawn with probability proportional to gamma_j."""
    if start > stop - 1:
        raise ValueError(f"empty output window [{start}, {stop})")
    w = np.asarray(gammas, dtype=float)[start:stop]
    if np.any(w <= 0):
        raise ValueError("stepsizes must be positive")
    c = np.cumsum(w)
    j = int(np.searchsorted(c, rng.uniform() * c[-1], side="right"))
    return start + min(j, len(w) - 1)


def pick_output_index_full(gammas, K: int, rng: np.random.Generator) -> int:
    return pick_output_index(gammas, 0, K, rng)


def sqn_stepsize_bound(eta: float, delta: float, p: int, l0: float, n: int) -> float:
    """Largest stepsize lambda_lo / (lambda_hi^2 L_eta) covered by the convergence theory."""
    if delta * eta**2 > 4.0:
        warnings.warn(f"delta * eta^2 = {delta * eta**2:g} > 4", stacklevel=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lo, hi = eigenvalue_bounds(eta, delta, p, l0, n)
    return lo / (hi**2 * smoothed_lipschitz(l0, n, eta))
