"""Stochastic objectives f(x) = E[F(x, xi)] accessed only through sampled values.

Two benchmark families are provided (minimum of two noisy quadratics and
L1-penalized logistic regression on synthetic data) together with a few
analytic objectives whose smoothed gradients are known in closed form.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special


class StochasticProblem:
    """Base class for a sampled objective.

    Subclasses implement ``sample`` and ``evaluate_batch``. Realizations are
    returned as numpy arrays (one entry per draw) so batches can be evaluated
    in a single vectorized call.

    The optional oracle methods (``true_value``, ``true_grad``,
    ``smoothed_grad``) return ``None`` when no closed form is available.
    """

    name = "problem"

    def __init__(self, dim: int, lipschitz_l0: float):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        if not lipschitz_l0 > 0:
            raise ValueError(f"lipschitz_l0 must be positive, got {lipschitz_l0}")
        self.dim = int(dim)
        self.lipschitz_l0 = float(lipschitz_l0)

    def sample(self, rng: np.random.Generator, size: int | None = None):
        raise NotImplementedError

    def evaluate_batch(self, X: np.ndarray, xi) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x, xi) -> float:
        x = self._check_point(x)
        return float(self.evaluate_batch(x[None, :], np.atleast_1d(xi))[0])

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of shape ({self.dim},), got {x.shape}")
        return x

    def _check_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError(f"expected points of shape (m, {self.dim}), got {X.shape}")
        return X

    # oracles -----------------------------------------------------------

    def true_value(self, x) -> float | None:
        return None

    def true_grad(self, x) -> np.ndarray | None:
        return None

    def smoothed_grad(self, x, eta: float) -> np.ndarray | None:
        return None


class MinTwoQuadratics(StochasticProblem):
    """F(x, xi) = min(sum (x_i - xi)^2, sum (x_i + xi)^2) with xi ~ U[0, 2].

    Integrating over xi gives f(x) = |x|^2 + 4n/3 - 2|sum(x)|, which is
    nonsmooth on the hyperplane sum(x) = 0 and minimized at x = +-1.
    """

    name = "minquad"

    def __init__(self, n: int, radius: float = 5.0):
        # sup of |grad f_1|, |grad f_2| = 2|x -+ xi 1| over |x| <= radius, xi <= 2
        super().__init__(n, 2.0 * (radius + 2.0 * math.sqrt(n)))
        self.radius = float(radius)

    def sample(self, rng, size=None):
        return rng.uniform(0.0, 2.0, size=size)

    def evaluate_batch(self, X, xi):
        X = self._check_batch(X)
        xi = np.asarray(xi, dtype=float).reshape(-1, 1)
        f1 = np.sum((X - xi) ** 2, axis=1)
        f2 = np.sum((X + xi) ** 2, axis=1)
        return np.minimum(f1, f2)

    def true_value(self, x):
        x = self._check_point(x)
        return float(x @ x + 4.0 * self.dim / 3.0 - 2.0 * abs(x.sum()))

    def true_grad(self, x):
        x = self._check_point(x)
        return 2.0 * x - 2.0 * np.sign(x.sum()) * np.ones(self.dim)

    def smoothed_grad(self, x, eta):
        """Exact gradient of the ball-smoothed objective.

        Only |sum(x + eta u)| needs smoothing. Projected onto the unit vector
        1/sqrt(n), a uniform point of the unit ball has density proportional
        to (1 - t^2)^((n-1)/2), i.e. (1 + t)/2 ~ Beta((n+1)/2, (n+1)/2).
        """
        x = self._check_point(x)
        n = self.dim
        threshold = -x.sum() / (eta * math.sqrt(n))
        threshold = min(max(threshold, -1.0), 1.0)
        half = 0.5 * (n + 1)
        cdf = special.betainc(half, half, 0.5 * (1.0 + threshold))
        mean_sign = 1.0 - 2.0 * cdf
        return 2.0 * x - 2.0 * mean_sign * np.ones(n)

    def quadrature_value(self, x) -> float:
        """f(x) by 1-D quadrature over xi; independent of the closed form."""
        from scipy import integrate

        x = self._check_point(x)
        value, _ = integrate.quad(
            lambda t: float(self.evaluate_batch(x[None, :], [t])[0]) / 2.0,
            0.0,
            2.0,
            limit=200,
        )
        return value


def make_min_two_quadratics(n: int, radius: float = 5.0) -> MinTwoQuadratics:
    if n < 1:
        raise ValueError("n must be >= 1")
    return MinTwoQuadratics(n, radius=radius)


# ----------------------------------------------------------------------------
# logistic regression


@dataclass
class LogisticDataset:
    """Feature matrix ``Z`` of shape (S, n-1) and 0/1 labels ``y``."""

    Z: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.Z = np.asarray(self.Z, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.Z.ndim != 2 or self.y.shape != (self.Z.shape[0],):
            raise ValueError("Z must be (S, d) and y must be (S,)")

    @property
    def size(self) -> int:
        return self.Z.shape[0]

    def to_csv(self, path) -> None:
        d = self.Z.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"z_{j + 1}" for j in range(d)] + ["y"])
            for row, label in zip(self.Z, self.y):
                writer.writerow([repr(float(v)) for v in row] + [int(label)])

    @classmethod
    def from_csv(cls, path) -> "LogisticDataset":
        with open(Path(path), newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[-1] != "y":
                raise ValueError(f"{path}: last column must be 'y'")
            rows = [[float(v) for v in row] for row in reader if row]
        data = np.array(rows, dtype=float).reshape(-1, len(header))
        return cls(data[:, :-1], data[:, -1])


def informative_count(n_features: int, frac: float) -> int:
    # guard against 0.2 * 15 = 3.0000000000000004
    return max(1, math.ceil(frac * n_features - 1e-9))


def generate_logistic_data(
    S: int,
    n: int,
    informative_frac: float = 0.2,
    seed: int = 0,
    class_sep: float = 2.0,
) -> LogisticDataset:
    """Synthetic binary classification data for an ``n``-parameter model.

    ``n`` counts the bias, so there are ``n - 1`` features. The first
    ``ceil(informative_frac * (n - 1))`` are class-conditional Gaussians with
    means ``+-class_sep`` and unit variance; the rest are standard normal
    noise. Labels are fair coin flips; an all-one-class draw (S >= 2) is
    regenerated from the next seed.
    """
    if S < 1 or n < 2 or not 0 < informative_frac <= 1:
        raise ValueError("need S >= 1, n >= 2 and 0 < informative_frac <= 1")
    d = n - 1
    k = informative_count(d, informative_frac)
    while True:
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 2, size=S).astype(float)
        if S == 1 or 0 < y.sum() < S:
            break
        warnings.warn(f"degenerate labels for seed {seed}; regenerating with seed {seed + 1}")
        seed += 1
    Z = rng.standard_normal((S, d))
    Z[:, :k] += class_sep * (2.0 * y[:, None] - 1.0)
    return LogisticDataset(Z, y)


class LogisticL1(StochasticProblem):
    """Per-sample negative log-likelihood plus ``lam * |w|_1``.

    The decision variable is x = (w, w0) with the bias last; a realization
    is a row index into the dataset.
    """

    name = "logistic"

    def __init__(self, dataset: LogisticDataset, lam: float = 0.01):
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        self.dataset = dataset
        self.lam = float(lam)
        d = dataset.Z.shape[1]
        norms = np.linalg.norm(dataset.Z, axis=1)
        l0 = float(norms.max()) + 1.0 + self.lam * math.sqrt(d)
        super().__init__(d + 1, l0)

    def sample(self, rng, size=None):
        return rng.integers(0, self.dataset.size, size=size)

    def _margins(self, X, Z):
        return np.einsum("ij,ij->i", X[:, :-1], Z) + X[:, -1]

    def evaluate_batch(self, X, xi):
        X = self._check_batch(X)
        idx = np.asarray(xi, dtype=np.int64)
        t = self._margins(X, self.dataset.Z[idx])
        nll = np.logaddexp(0.0, t) - self.dataset.y[idx] * t
        return nll + self.lam * np.abs(X[:, :-1]).sum(axis=1)

    def true_value(self, x):
        x = self._check_point(x)
        t = self.dataset.Z @ x[:-1] + x[-1]
        risk = np.mean(np.logaddexp(0.0, t) - self.dataset.y * t)
        return float(risk + self.lam * np.abs(x[:-1]).sum())

    def true_grad(self, x):
        x = self._check_point(x)
        t = self.dataset.Z @ x[:-1] + x[-1]
        r = special.expit(t) - self.dataset.y
        g = np.empty(self.dim)
        g[:-1] = self.dataset.Z.T @ r / self.dataset.size + self.lam * np.sign(x[:-1])
        g[-1] = r.mean()
        return g


def make_logistic_l1(
    S: int,
    n: int,
    informative_frac: float = 0.2,
    lam: float = 0.01,
    seed: int = 0,
    class_sep: float = 2.0,
) -> tuple[LogisticL1, LogisticDataset]:
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    data = generate_logistic_data(S, n, informative_frac, seed, class_sep)
    return LogisticL1(data, lam), data


def classification_metrics(dataset: LogisticDataset, x) -> dict[str, float]:
    """Accuracy, precision and recall at threshold sigma(w.z + w0) >= 0.5.

    Precision is NaN when nothing is predicted positive; recall is NaN when
    the dataset has no positives.
    """
    x = np.asarray(x, dtype=float)
    pred = (dataset.Z @ x[:-1] + x[-1]) >= 0.0
    truth = dataset.y > 0.5
    tp = int(np.sum(pred & truth))
    accuracy = float(np.mean(pred == truth))
    precision = tp / int(pred.sum()) if pred.any() else math.nan
    recall = tp / int(truth.sum()) if truth.any() else math.nan
    return {"accuracy": accuracy, "precision": precision, "recall": recall}


# ----------------------------------------------------------------------------
# analytic objectives with known smoothed gradients


class LinearObjective(StochasticProblem):
    """Noise-free F(x) = c.x; its smoothed gradient is c everywhere."""

    name = "linear"

    def __init__(self, c):
        c = np.asarray(c, dtype=float)
        super().__init__(c.size, max(float(np.linalg.norm(c)), 1e-300))
        self.c = c

    def sample(self, rng, size=None):
        return np.zeros(size) if size is not None else 0.0

    def evaluate_batch(self, X, xi):
        return self._check_batch(X) @ self.c

    def true_value(self, x):
        return float(self._check_point(x) @ self.c)

    def true_grad(self, x):
        return self.c.copy()

    def smoothed_grad(self, x, eta):
        return self.c.copy()


class ConstantObjective(StochasticProblem):
    name = "constant"

    def __init__(self, n: int, value: float = 1.0):
        super().__init__(n, 1e-300)
        self.value = float(value)

    def sample(self, rng, size=None):
        return np.zeros(size) if size is not None else 0.0

    def evaluate_batch(self, X, xi):
        return np.full(self._check_batch(X).shape[0], self.value)

    def true_value(self, x):
        return self.value

    def true_grad(self, x):
        return np.zeros(self.dim)

    def smoothed_grad(self, x, eta):
        return np.zeros(self.dim)


class NormObjective(StochasticProblem):
    """F(x) = l0 * |x - center|, exactly l0-Lipschitz and nonsmooth at center."""

    name = "norm"

    def __init__(self, n: int, l0: float = 1.0, center=None):
        super().__init__(n, l0)
        self.center = np.zeros(n) if center is None else np.asarray(center, dtype=float)

    def sample(self, rng, size=None):
        return np.zeros(size) if size is not None else 0.0

    def evaluate_batch(self, X, xi):
        return self.lipschitz_l0 * np.linalg.norm(self._check_batch(X) - self.center, axis=1)

    def true_value(self, x):
        return self.lipschitz_l0 * float(np.linalg.norm(self._check_point(x) - self.center))

    def true_grad(self, x):
        d = self._check_point(x) - self.center
        r = np.linalg.norm(d)
        return self.lipschitz_l0 * d / r if r > 0 else np.zeros(self.dim)
