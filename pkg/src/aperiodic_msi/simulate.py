"""Closed-loop simulation, falsification and experiment generation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataSet, DisturbanceModel, norm_bound_disturbance
from .delay import SamplingPattern
from .model import SystemModel


def closed_loop(model: SystemModel, pattern: SamplingPattern, x0, horizon: int) -> np.ndarray:
    """States ``x(0..horizon)`` under sample-and-hold feedback, shape ``(horizon+1, n)``."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != model.n:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {model.n}")
    if not pattern.covers(horizon):
        raise ValueError(f"pattern covers {pattern.length} steps, need {horizon}")
    xs = np.empty((horizon + 1, model.n))
    xs[0] = x0
    t = 0
    for h in pattern.intervals:
        u = model.K @ xs[t]
        for _ in range(h):
            if t == horizon:
                return xs
            xs[t + 1] = model.A @ xs[t] + model.B @ u
            t += 1
    return xs


def interval_map(model: SystemModel, h: int) -> np.ndarray:
    """Transition over one sampling interval: ``A^h + (sum_{i<h} A^i) B K``."""
    if h < 1:
        raise ValueError("interval length must be at least 1")
    return interval_maps(model, h)[-1]


def interval_maps(model: SystemModel, hbar: int) -> np.ndarray:
    """Stacked transitions for every interval length ``1..hbar``, shape ``(hbar, n, n)``."""
    n = model.n
    BK = model.B @ model.K
    out = np.empty((hbar, n, n))
    power, geo = np.eye(n), np.zeros((n, n))
    for h in range(hbar):
        geo = geo + power
        power = power @ model.A
        out[h] = power + geo @ BK
    return out


@dataclass
class FalsificationResult:
    growth: float  # max ||x(T)|| / ||x(0)|| found
    pattern: SamplingPattern
    x0: np.ndarray
    trials: int


def _run(maps, intervals, x0) -> float:
    x = x0.copy()
    for h in intervals:
        x = maps[h - 1] @ x
    return float(np.linalg.norm(x) / np.linalg.norm(x0))


def falsify(model: SystemModel, hbar: int, trials: int = 100, horizon: int = 1000,
            seed=None, greedy_starts: int = 4) -> FalsificationResult:
    """Heuristic search for a sampling pattern under which the state grows.

    Combines random patterns with greedy ones that pick, at every sampling
    instant, the interval length giving the largest state norm.  Absence of
    growth is evidence of stability, not proof.
    """
    rng = np.random.default_rng(seed)
    maps = interval_maps(model, hbar)
    best: FalsificationResult | None = None

    def consider(intervals, x0):
        nonlocal best
        growth = _run(maps, intervals, x0)
        if best is None or growth > best.growth:
            best = FalsificationResult(growth, SamplingPattern(tuple(intervals), hbar), x0, 0)

    for _ in range(trials):
        x0 = rng.standard_normal(model.n)
        consider(_truncate(SamplingPattern.random(hbar, horizon, rng), horizon).intervals, x0)

    norms = np.linalg.norm(maps, ord=2, axis=(1, 2))
    starts = np.argsort(norms)[::-1][:greedy_starts]
    for h0 in starts:
        x0 = np.linalg.svd(maps[h0])[2][0]
        x, intervals, total = x0.copy(), [], 0
        while total < horizon:
            top = min(hbar, horizon - total)
            cand = np.linalg.norm(maps[:top] @ x, axis=1)
            h = int(np.argmax(cand)) + 1
            x = maps[h - 1] @ x
            x /= max(np.linalg.norm(x), 1e-300)
            intervals.append(h)
            total += h
        consider(intervals, x0)
    best.trials = trials + len(starts)
    return best


def _truncate(pattern: SamplingPattern, horizon: int) -> SamplingPattern:
    out, total = [], 0
    for h in pattern.intervals:
        h = min(h, horizon - total)
        out.append(h)
        total += h
        if total >= horizon:
            break
    return SamplingPattern(tuple(out), pattern.hbar)


def sample_ball(rng, n: int, count: int, radius: float) -> np.ndarray:
    """``count`` points uniform in the Euclidean ball of ``radius`` in R^n, shape ``(n, count)``."""
    g = rng.standard_normal((n, count))
    g /= np.linalg.norm(g, axis=0)
    return g * radius * rng.uniform(0.0, 1.0, count) ** (1.0 / n)


@dataclass
class Experiment:
    dataset: DataSet
    x: np.ndarray  # states x(0..N), shape (N+1, n)
    u: np.ndarray  # inputs u(0..N-1), shape (N, m)
    D: np.ndarray  # realised disturbance, shape (n_d, N)


def generate_experiment(model_true: SystemModel, N: int, input_range=(-10.0, 10.0),
                        dbar: float = 0.0, Bd=None, seed=None, x0=None,
                        disturbance: DisturbanceModel | None = None) -> Experiment:
    """Open-loop experiment ``x(t+1) = A x + B u + Bd d`` with uniform input and ball-bounded noise."""
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = np.random.default_rng(seed)
    n, m = model_true.n, model_true.m
    Bd = np.eye(n) if Bd is None else np.atleast_2d(np.asarray(Bd, dtype=float))
    nd = Bd.shape[1]
    lo, hi = input_range
    u = rng.uniform(lo, hi, (N, m))
    D = sample_ball(rng, nd, N, dbar)
    x = np.zeros((N + 1, n))
    if x0 is not None:
        x[0] = x0
    for t in range(N):
        x[t + 1] = model_true.A @ x[t] + model_true.B @ u[t] + Bd @ D[:, t]
    if disturbance is None:
        disturbance = norm_bound_disturbance(N, nd, dbar, Bd)
    return Experiment(DataSet.from_trajectory(x, u, disturbance), x, u, D)
