"""Flat ``key = value`` experiment configuration.

Grammar, one entry per line::

    # comment (also allowed after a value)
    key = value

Keys are dotted names (``step.gamma0``). Values are Python literals
(numbers, quoted strings, lists), ``true``/``false``, or a bare word which is
taken as a string. Later lines override earlier ones.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass

import numpy as np

from ..geometry import Ball, Box, ConvexSet, WholeSpace
from ..problems import generate_logistic_data, make_logistic_l1, make_min_two_quadratics
from ..schedules import BATCH_KINDS, STEP_KINDS, BatchSchedule, StepSchedule
from ..vrg import VrgConfig
from ..vrsqn import COLD_STARTS, VrsqnConfig


class ConfigError(ValueError):
    """Bad configuration; the CLI maps it to exit status 2."""


DEFAULTS = {
    "problem": "minquad",
    "n": 12,
    "S": 1000,
    "lambda": 0.01,
    "informative_frac": 0.2,
    "class_sep": 2.0,
    "data_seed": 0,
    "test_S": 5000,
    "test_seed": None,
    "minquad.radius": 5.0,
    "set": None,
    "box.lower": -5.0,
    "box.upper": 5.0,
    "ball.center": 0.0,
    "ball.radius": 1.0,
    "algo": "vrsqn",
    "eta": 0.1,
    "step.kind": "constant",
    "step.gamma0": 0.01,
    "step.scale": 100.0,
    "batch.kind": "affine",
    "batch.a": 1.0,
    "batch.b": 0.0,
    "batch.c": None,
    "batch.size": 1,
    "batch.max": None,
    "budget": None,
    "K": None,
    "lambda_window": 0.5,
    "beta": None,
    "sqn.p": 5,
    "sqn.delta": None,
    "sqn.cold_start": "scaled",
    "metric.M": 1000,
    "metric.checkpoints": 50,
    "x0": "center",
    "x0_seed": 0,
    "reps": 1,
    "seed": 0,
}

INT_KEYS = {"n", "S", "data_seed", "test_S", "test_seed", "batch.size", "batch.max", "budget", "K", "sqn.p",
            "metric.M", "metric.checkpoints", "x0_seed", "reps", "seed"}


def parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null", ""):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if ch in "\"'":
            if quote is None:
                quote = ch
            elif quote == ch:
                quote = None
        elif ch == "#" and quote is None:
            return line[:i]
    return line


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key] = parse_value(value)
    return out


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def resolve(raw: dict) -> dict:
    """Defaults merged with ``raw``, unknown keys rejected, integer keys coerced."""
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = dict(DEFAULTS)
    cfg.update(raw)
    for key in INT_KEYS:
        v = cfg[key]
        if v is None:
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v != int(v):
            raise ConfigError(f"{key} must be an integer, got {v!r}")
        cfg[key] = int(v)
    if cfg["budget"] is None and cfg["K"] is None:
        raise ConfigError("set either budget or K")
    if cfg["reps"] < 1:
        raise ConfigError("reps must be >= 1")
    if cfg["algo"] not in ("vrg", "vrsqn"):
        raise ConfigError(f"algo must be 'vrg' or 'vrsqn', got {cfg['algo']!r}")
    if cfg["problem"] not in ("minquad", "logistic"):
        raise ConfigError(f"problem must be 'minquad' or 'logistic', got {cfg['problem']!r}")
    if cfg["set"] is None:
        cfg["set"] = "box" if cfg["problem"] == "minquad" else "rn"
    if cfg["set"] not in ("rn", "box", "ball"):
        raise ConfigError(f"set must be 'rn', 'box' or 'ball', got {cfg['set']!r}")
    if cfg["step.kind"] not in STEP_KINDS:
        raise ConfigError(f"step.kind must be one of {STEP_KINDS}")
    if cfg["batch.kind"] not in BATCH_KINDS:
        raise ConfigError(f"batch.kind must be one of {BATCH_KINDS}")
    if cfg["sqn.cold_start"] not in COLD_STARTS:
        raise ConfigError(f"sqn.cold_start must be one of {COLD_STARTS}")
    if not (isinstance(cfg["eta"], (int, float)) and cfg["eta"] > 0):
        raise ConfigError("eta must be a positive number")
    return cfg


@dataclass
class ProblemBundle:
    problem: object
    feasible_set: ConvexSet
    test_data: object = None


def _vector(value, n: int, key: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ConfigError(f"{key} must be a scalar or a list of length {n}")
    return arr


def build_problem(cfg: dict) -> ProblemBundle:
    n = cfg["n"]
    try:
        if cfg["problem"] == "minquad":
            problem = make_min_two_quadratics(n, cfg["minquad.radius"])
            test = None
        else:
            problem, _ = make_logistic_l1(cfg["S"], n, cfg["informative_frac"], cfg["lambda"],
                                          cfg["data_seed"], cfg["class_sep"])
            test_seed = cfg["test_seed"] if cfg["test_seed"] is not None else cfg["data_seed"] + 1000
            test = generate_logistic_data(cfg["test_S"], n, cfg["informative_frac"], test_seed, cfg["class_sep"])
        if cfg["set"] == "rn":
            fs = WholeSpace()
        elif cfg["set"] == "box":
            fs = Box(_vector(cfg["box.lower"], n, "box.lower"), _vector(cfg["box.upper"], n, "box.upper"))
        else:
            fs = Ball(_vector(cfg["ball.center"], n, "ball.center"), cfg["ball.radius"])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return ProblemBundle(problem, fs, test)


def initial_point(cfg: dict, bundle: ProblemBundle) -> np.ndarray | None:
    x0 = cfg["x0"]
    n = cfg["n"]
    if x0 == "center":
        return None
    if x0 == "random":
        try:
            return bundle.feasible_set.sample_uniform(np.random.default_rng(cfg["x0_seed"]), n)
        except ValueError as exc:
            raise ConfigError(f"x0 = random needs a bounded set: {exc}") from exc
    if isinstance(x0, str):
        raise ConfigError(f"x0 must be 'center', 'random', a number or a list, got {x0!r}")
    return _vector(x0, n, "x0")


def build_schedules(cfg: dict, bundle: ProblemBundle) -> tuple[StepSchedule, BatchSchedule]:
    n = cfg["n"]
    l0 = bundle.problem.lipschitz_l0
    try:
        step = StepSchedule(cfg["step.kind"], float(cfg["step.gamma0"]), float(cfg["step.scale"]))
        c = cfg["batch.c"]
        if c is None:
            c = cfg["batch.a"] * n * l0 * cfg["eta"] ** 3
        batch = BatchSchedule(cfg["batch.kind"], a=float(cfg["batch.a"]), b=float(cfg["batch.b"]), c=float(c),
                              n=n, l0=l0, size=cfg["batch.size"], cap=cfg["batch.max"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return step, batch


def build_solver_config(cfg: dict, bundle: ProblemBundle):
    step, batch = build_schedules(cfg, bundle)
    x0 = initial_point(cfg, bundle)
    try:
        if cfg["algo"] == "vrg":
            return VrgConfig(eta=cfg["eta"], step=step, batch=batch, budget=cfg["budget"], max_iter=cfg["K"],
                             window=cfg["lambda_window"], beta=cfg["beta"], metric_batch=cfg["metric.M"],
                             checkpoints=cfg["metric.checkpoints"], x0=x0)
        return VrsqnConfig(eta=cfg["eta"], delta=cfg["sqn.delta"], memory=cfg["sqn.p"], step=step, batch=batch,
                           budget=cfg["budget"], max_iter=cfg["K"], cold_start=cfg["sqn.cold_start"],
                           metric_batch=cfg["metric.M"], checkpoints=cfg["metric.checkpoints"], x0=x0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_overrides(tokens: list[str]) -> dict:
    """``--key value`` or ``--key=value`` pairs from the command line."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for --{key}")
            value = tokens[i + 1]
            i += 2
        if key not in DEFAULTS:
            raise ConfigError(f"unknown option --{key}")
        out[key] = parse_value(value)
    return out
