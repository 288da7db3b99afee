"""Static IQC multipliers for the delay operator and finite-horizon checks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .delay import SamplingPattern, apply_delay

# horizons longer than this accumulate partial sums in extended precision
LONG_HORIZON = 10_000


def _sym(M) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return 0.5 * (M + M.T)


def psd_tolerance(M, atol: float = 1e-9) -> float:
    """Absolute eigenvalue tolerance scaled by the spectral norm of ``M``."""
    return atol * max(1.0, float(np.linalg.norm(M, 2)))


def min_eig(M) -> float:
    return float(np.linalg.eigvalsh(_sym(M))[0])


def is_psd(M, atol: float = 1e-9) -> bool:
    return min_eig(M) >= -psd_tolerance(M, atol)


def is_pd(M, atol: float = 1e-9) -> bool:
    return min_eig(M) > psd_tolerance(M, atol)


@dataclass(frozen=True)
class MultiplierSet:
    """Gain multiplier ``X > 0``, passivity multiplier ``Y >= 0`` and squared gain."""

    X: np.ndarray
    Y: np.ndarray
    gain_sq: float

    def __post_init__(self):
        X, Y = _sym(self.X), _sym(self.Y)
        if X.shape != Y.shape:
            raise ValueError(f"X {X.shape} and Y {Y.shape} must have equal shape")
        if not is_pd(X):
            raise ValueError("gain multiplier X must be positive definite")
        if not is_psd(Y):
            raise ValueError("passivity multiplier Y must be positive semidefinite")
        if self.gain_sq < 0:
            raise ValueError("squared gain must be nonnegative")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]


def passivity_pi(Y) -> np.ndarray:
    """``[[Y, Y], [Y, 0]]``: input-feedforward passivity with feedforward factor 1/2."""
    Y = _sym(Y)
    Z = np.zeros_like(Y)
    return np.block([[Y, Y], [Y, Z]])


def gain_pi(X, gain_sq: float) -> np.ndarray:
    """``[[gain_sq X, 0], [0, -X]]``: l2 gain bound."""
    X = _sym(X)
    Z = np.zeros_like(X)
    return np.block([[gain_sq * X, Z], [Z, -X]])


def assemble_pi(ms: MultiplierSet) -> np.ndarray:
    """Combined multiplier ``[[g X + Y, Y], [Y, -X]]``."""
    return gain_pi(ms.X, ms.gain_sq) + passivity_pi(ms.Y)


class IqcCheck(NamedTuple):
    holds: bool
    partial_sums: np.ndarray


def _as_signal(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim != 2:
        raise ValueError(f"signal must have shape (T,) or (T, n), got {s.shape}")
    return s


def _partial_sums(terms: np.ndarray) -> np.ndarray:
    if terms.shape[0] > LONG_HORIZON:
        return np.cumsum(terms.astype(np.longdouble)).astype(float)
    return np.cumsum(terms)


def check_iqc(y, e, pi, tol: float = 1e-9) -> IqcCheck:
    """Check ``sum_{t<=T} [y; e]' Pi [y; e] >= 0`` for every truncation ``T``.

    The tolerance is relative to the running sum of absolute summands.
    """
    y, e = _as_signal(y), _as_signal(e)
    pi = np.asarray(pi, dtype=float)
    if y.shape != e.shape:
        raise ValueError(f"y {y.shape} and e {e.shape} differ in shape")
    if pi.shape != (2 * y.shape[1],) * 2:
        raise ValueError(f"multiplier shape {pi.shape} does not match signal width {y.shape[1]}")
    v = np.hstack([y, e])
    terms = np.einsum("ti,ij,tj->t", v, pi, v)
    sums = _partial_sums(terms)
    scale = np.maximum(1.0, np.cumsum(np.abs(terms)))
    return IqcCheck(bool(np.all(sums >= -tol * scale)), sums)


def check_passivity(y, pattern: SamplingPattern, Y, factor: float = 0.5,
                    tol: float = 1e-9) -> IqcCheck:
    """Evaluate ``sum (y' Y e + factor * y' Y y) >= 0`` with ``e`` the delayed signal.

    ``factor = 1/2`` is the smallest value for which the inequality holds for
    every signal and pattern.
    """
    Y = _sym(Y)
    if not is_psd(Y):
        raise ValueError("passivity multiplier Y must be positive semidefinite")
    y = _as_signal(y)
    if y.shape[1] != Y.shape[0]:
        raise ValueError(f"signal width {y.shape[1]} does not match Y {Y.shape}")
    e = apply_delay(y, pattern)
    terms = np.einsum("ti,ij,tj->t", y, Y, e) + factor * np.einsum("ti,ij,tj->t", y, Y, y)
    sums = _partial_sums(terms)
    scale = np.maximum(1.0, np.cumsum(np.abs(terms)))
    return IqcCheck(bool(np.all(sums >= -tol * scale)), sums)
