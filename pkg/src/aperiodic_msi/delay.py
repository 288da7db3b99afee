"""Sawtooth delay operator induced by aperiodic sample-and-hold feedback.

Between two sampling instants the held state lags behind the true state by
``tau(t) = t - t_k``.  Writing ``y(t) = x(t) - x(t+1)`` the sampling error
``e(t) = x(t_k) - x(t)`` is a running sum of ``y`` that resets at every
sampling instant.  Its squared l2 gain is the largest eigenvalue of the
matrix returned by :func:`build_E`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

GAIN_MODES = ("exact", "frobenius", "legacy")

# above this size the dense eigensolver is replaced by the Frobenius bound
EIG_SIZE_LIMIT = 2000


@dataclass(frozen=True)
class SamplingPattern:
    """Sequence of sampling intervals ``h_k`` bounded by ``hbar``."""

    intervals: tuple[int, ...]
    hbar: int

    def __post_init__(self):
        intervals = tuple(int(h) for h in self.intervals)
        object.__setattr__(self, "intervals", intervals)
        if int(self.hbar) < 1:
            raise ValueError(f"hbar must be a positive integer, got {self.hbar}")
        if not intervals:
            raise ValueError("a sampling pattern needs at least one interval")
        bad = [h for h in intervals if not 1 <= h <= self.hbar]
        if bad:
            raise ValueError(f"intervals {bad} outside [1, {self.hbar}]")

    @classmethod
    def periodic(cls, h: int, horizon: int) -> "SamplingPattern":
        count = -(-horizon // h)
        return cls((h,) * count, h)

    @classmethod
    def random(cls, hbar: int, horizon: int, rng=None) -> "SamplingPattern":
        """Uniformly drawn intervals in ``1..hbar`` covering ``horizon`` steps."""
        rng = np.random.default_rng(rng)
        intervals = []
        total = 0
        while total < horizon:
            h = int(rng.integers(1, hbar + 1))
            intervals.append(h)
            total += h
        return cls(tuple(intervals), hbar)

    @property
    def instants(self) -> np.ndarray:
        """Sampling instants ``t_0 = 0, t_1, ...`` (one more than intervals)."""
        return np.concatenate([[0], np.cumsum(self.intervals)])

    @property
    def length(self) -> int:
        return int(sum(self.intervals))

    def covers(self, horizon: int) -> bool:
        return self.length >= horizon


def _check_hbar(hbar) -> int:
    if isinstance(hbar, (bool, np.bool_)) or int(hbar) != hbar or hbar < 1:
        raise ValueError(f"hbar must be a positive integer, got {hbar!r}")
    return int(hbar)


def build_E(hbar: int) -> np.ndarray:
    """Gain matrix with entries ``min(i, j) - 1`` (1-indexed)."""
    hbar = _check_hbar(hbar)
    idx = np.arange(1, hbar + 1)
    return (np.minimum.outer(idx, idx) - 1).astype(float)


def exact_gain(hbar: int) -> float:
    """Squared l2 gain of the delay operator, ``lambda_max(E_hbar)``."""
    hbar = _check_hbar(hbar)
    if hbar == 1:
        return 0.0
    top = linalg.eigh(build_E(hbar), eigvals_only=True,
                      subset_by_index=[hbar - 1, hbar - 1])
    return float(max(top[0], 0.0))


def frobenius_gain(hbar: int) -> float:
    """Frobenius norm of ``E_hbar``, an upper bound on :func:`exact_gain`.

    ``||E||_F = sqrt((hbar - 1) hbar (hbar^2 - hbar + 1) / 6)``.  Note that the
    norm itself (not its square) bounds the squared gain.
    """
    h = _check_hbar(hbar)
    return float(np.sqrt((h - 1) * h * (h * h - h + 1) / 6.0))


def legacy_gain(hbar: int) -> float:
    """Earlier squared-gain bound ``hbar (hbar - 1) / 2``."""
    h = _check_hbar(hbar)
    return h * (h - 1) / 2.0


def gain_value(hbar: int, mode: str = "exact", eig_limit: int = EIG_SIZE_LIMIT) -> float:
    """Squared gain used inside the multiplier for the given ``mode``.

    In ``exact`` mode the Frobenius bound is substituted once ``hbar`` exceeds
    ``eig_limit``.
    """
    if mode == "exact":
        if _check_hbar(hbar) > eig_limit:
            return frobenius_gain(hbar)
        return exact_gain(hbar)
    if mode == "frobenius":
        return frobenius_gain(hbar)
    if mode == "legacy":
        return legacy_gain(hbar)
    raise ValueError(f"unknown gain mode {mode!r}; expected one of {GAIN_MODES}")


@dataclass(frozen=True)
class DelayGainBundle:
    hbar: int
    exact_sq_gain: float
    frobenius_sq_gain: float
    legacy_sq_gain: float

    def ratios(self) -> tuple[float, float]:
        """(exact, Frobenius) gains relative to the legacy gain (not squared)."""
        if self.legacy_sq_gain == 0:
            return (float("nan"), float("nan"))
        return (np.sqrt(self.exact_sq_gain / self.legacy_sq_gain),
                np.sqrt(self.frobenius_sq_gain / self.legacy_sq_gain))


def gain_bundle(hbar: int) -> DelayGainBundle:
    return DelayGainBundle(_check_hbar(hbar), exact_gain(hbar),
                           frobenius_gain(hbar), legacy_gain(hbar))


def lifted_matrix(hbar: int) -> np.ndarray:
    """One-interval delay operator on lifted scalar signals.

    Strictly lower triangular with unit entries, so ``D @ D.T == build_E(hbar)``.
    """
    hbar = _check_hbar(hbar)
    return np.tril(np.ones((hbar, hbar)), k=-1)


def delay_sequence(pattern: SamplingPattern, horizon: int) -> np.ndarray:
    """Sawtooth ``tau(t)`` for ``t = 0..horizon-1``."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if not pattern.covers(horizon):
        raise ValueError(f"pattern covers {pattern.length} steps, need {horizon}")
    tau = np.concatenate([np.arange(h) for h in pattern.intervals])
    return tau[:horizon]


def apply_delay(y, pattern: SamplingPattern) -> np.ndarray:
    """Apply the delay operator to a time-major signal ``y`` (shape ``(T,)`` or ``(T, n)``).

    Uses ``e(t_k) = 0`` and ``e(t+1) = e(t) + y(t)`` inside each interval.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim not in (1, 2) or y.shape[0] < 1:
        raise ValueError(f"expected a non-empty signal of shape (T,) or (T, n), got {y.shape}")
    tau = delay_sequence(pattern, y.shape[0])
    e = np.zeros_like(y)
    for t in range(1, y.shape[0]):
        if tau[t] != 0:
            e[t] = e[t - 1] + y[t - 1]
    return e
