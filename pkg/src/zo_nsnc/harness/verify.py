"""Self-checks of the library's invariants, runnable from the CLI without pytest."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..geometry import Ball, Box, moreau_indicator_grad, residual
from ..problems import LinearObjective, NormObjective, make_logistic_l1, make_min_two_quadratics
from ..schedules import BatchSchedule, StepSchedule
from ..smoothing import EvaluationCounter, zo_grad_batch, zo_grad_samples, sample_sphere
from ..sqn_core import CurvatureTriple, SqnMemory, dense_hessian, dense_inverse_hessian, two_loop
from ..vrsqn import VrsqnConfig, vrsqn_run

SECOND_MOMENT = 16.0 * math.sqrt(2.0 * math.pi)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_box(rng, n):
    lo = rng.uniform(-2, 0, n)
    return Box(lo, lo + rng.uniform(0.1, 3, n))


def check_projection(rng, scale=1.0) -> CheckResult:
    worst = 0.0
    idem = True
    for _ in range(int(1000 * scale)):
        n = int(rng.integers(1, 8))
        S = _random_box(rng, n) if rng.uniform() < 0.5 else Ball(rng.normal(size=n), rng.uniform(0.1, 3))
        x, y = rng.normal(scale=3, size=(2, n))
        px, py = S.project(x), S.project(y)
        idem &= bool(np.array_equal(S.project(px), px))
        worst = max(worst, np.linalg.norm(px - py) - np.linalg.norm(x - y))
    return CheckResult("projection idempotent and nonexpansive", idem and worst <= 1e-12,
                       f"max excess {worst:.2e}")


def check_residual_inequalities(rng, scale=1.0) -> CheckResult:
    bad4 = bad5 = 0
    m = int(10_000 * scale)
    for _ in range(m):
        n = int(rng.integers(1, 8))
        S = _random_box(rng, n)
        x, g, e = rng.normal(scale=2, size=(3, n))
        b1, b2 = np.sort(rng.uniform(0.01, 10, 2))
        lhs = np.sum(residual(S, x, g, b1) ** 2)
        rhs = 2 * np.sum(residual(S, x, g + e, b1) ** 2) + 2 * np.sum(e**2)
        bad4 += lhs > rhs + 1e-12
        bad5 += np.linalg.norm(residual(S, x, g, b1)) > np.linalg.norm(residual(S, x, g, b2)) + 1e-12
    return CheckResult("residual inequality and monotonicity in beta", bad4 == 0 and bad5 == 0,
                       f"{bad4} + {bad5} violations over {m} instances")


def check_moreau_lipschitz(rng, scale=1.0) -> CheckResult:
    worst = -math.inf
    for _ in range(int(1000 * scale)):
        n = int(rng.integers(1, 8))
        S = _random_box(rng, n)
        eta = rng.uniform(0.01, 2)
        x, y = rng.normal(scale=3, size=(2, n))
        d = np.linalg.norm(moreau_indicator_grad(S, x, eta) - moreau_indicator_grad(S, y, eta))
        worst = max(worst, d - np.linalg.norm(x - y) / eta)
    return CheckResult("Moreau gradient is 1/eta-Lipschitz", worst <= 1e-12, f"max excess {worst:.2e}")


def check_unbiased(rng, scale=1.0) -> CheckResult:
    n = 5
    c = rng.normal(size=n)
    P = LinearObjective(c)
    M = int(100_000 * scale)
    V = sample_sphere(rng, n, 0.1, M)
    per = zo_grad_samples(P, rng.normal(size=n), V, P.sample(rng, M), 0.1)
    z = np.abs(per.mean(0) - c) / (per.std(0, ddof=1) / math.sqrt(M))
    return CheckResult("two-point estimator is unbiased on linear objectives", bool(np.all(z < 4)),
                       f"max |z| = {z.max():.2f}")


def check_second_moment(rng, scale=1.0) -> CheckResult:
    worst = 0.0
    M = int(100_000 * scale)
    for n in (1, 5, 20):
        for l0 in (1.0, 3.0):
            P = NormObjective(n, l0)
            x = rng.normal(size=n)
            per = zo_grad_samples(P, x, sample_sphere(rng, n, 0.1, M), P.sample(rng, M), 0.1)
            worst = max(worst, np.mean(np.sum(per**2, 1)) / (SECOND_MOMENT * l0**2 * n))
    return CheckResult("second moment within 16 sqrt(2 pi) L0^2 n", worst <= 1.0, f"max ratio {worst:.3f}")


def random_memory(rng, n: int, p: int, delta: float = 1.0) -> SqnMemory:
    """Memory of p pairs damped the same way the solver damps them."""
    mem = SqnMemory(p, delta)
    for _ in range(p):
        s = rng.normal(size=n)
        y = rng.normal(size=n) + rng.uniform(-1, 3) * s
        mem.update(s, y)
    return mem


def check_two_loop(rng, scale=1.0) -> CheckResult:
    worst_r = worst_i = 0.0
    for _ in range(int(1000 * scale)):
        n = int(rng.integers(1, 9))
        p = int(rng.integers(1, 6))
        mem = random_memory(rng, n, p)
        g = rng.normal(size=n)
        H = dense_inverse_hessian(mem, n)
        worst_r = max(worst_r, np.max(np.abs(two_loop(mem, g) - H @ g)))
        worst_i = max(worst_i, np.max(np.abs(H @ dense_hessian(mem, n) - np.eye(n))))
    return CheckResult("two-loop equals dense inverse Hessian; H B = I", worst_r <= 1e-10 and worst_i <= 1e-8,
                       f"max |r - Hg| = {worst_r:.1e}, max |HB - I| = {worst_i:.1e}")


def check_curvature_in_runs(rng, scale=1.0) -> CheckResult:
    bad = 0
    total = 0

    def hook(info):
        nonlocal bad, total
        if info.update.accepted:
            t: CurvatureTriple = info.update.triple
            total += 1
            bound = 0.25 * t.nu * float(t.s @ t.s)
            bad += t.sy < bound * (1 - 1e-12)

    budget = int(20_000 * max(scale, 0.05))
    P = make_min_two_quadratics(4)
    cfg = VrsqnConfig(eta=0.1, delta=1.0, memory=3, step=StepSchedule("constant", 0.01),
                      batch=BatchSchedule("affine", a=0.1), budget=budget, x0=np.full(4, 2.0), checkpoints=2,
                      metric_batch=100)
    vrsqn_run(P, Box.cube(4, 10.0), cfg, int(rng.integers(1 << 31)), on_iteration=hook)
    L, _ = make_logistic_l1(200, 5, seed=int(rng.integers(1 << 31)))
    cfg.x0 = None
    vrsqn_run(L, Box.cube(5, 1.0), cfg, int(rng.integers(1 << 31)), on_iteration=hook)
    return CheckResult("damped pairs satisfy the curvature condition", bad == 0 and total > 0,
                       f"{bad} violations over {total} pairs")


def check_min_quadratics_oracle(rng, scale=1.0) -> CheckResult:
    worst = 0.0
    for n in (1, 3, 12):
        P = make_min_two_quadratics(n)
        for _ in range(3):
            x = rng.normal(size=n)
            worst = max(worst, abs(P.true_value(x) - P.quadrature_value(x)))
    return CheckResult("min-quadratics closed form matches quadrature", worst < 1e-8, f"max diff {worst:.1e}")


def check_budget_accounting(rng, scale=1.0) -> CheckResult:
    P = NormObjective(3)
    counter = EvaluationCounter()
    N = int(rng.integers(1, 50))
    zo_grad_batch(P, np.ones(3), 0.1, N, rng, counter)
    return CheckResult("two evaluations per sample pair", counter.count == 2 * N, f"{counter.count} for N={N}")


CHECKS: list[Callable] = [
    check_projection, check_residual_inequalities, check_moreau_lipschitz, check_unbiased, check_second_moment,
    check_two_loop, check_curvature_in_runs, check_min_quadratics_oracle, check_budget_accounting,
]


def run_checks(seed: int = 0, scale: float = 1.0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [check(rng, scale) for check in CHECKS]
