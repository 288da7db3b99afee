"""Model-based stability certificates for aperiodically sampled feedback."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .delay import gain_value
from .iqc import MultiplierSet, gain_pi, passivity_pi

SCHUR_TOL = 1e-9
DEFAULT_GRID = 2048


@dataclass(frozen=True)
class SystemModel:
    """``x(t+1) = A x(t) + B u(t)`` with held feedback ``u = K x(t_k)``."""

    A: np.ndarray
    B: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        K = np.asarray(self.K, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        B = B.reshape(n, -1) if B.ndim < 2 else B
        if B.shape[0] != n:
            raise ValueError(f"B has {B.shape[0]} rows, expected {n}")
        m = B.shape[1]
        K = K.reshape(m, n) if K.ndim < 2 and K.size == m * n else K
        if K.shape != (m, n):
            raise ValueError(f"K must have shape {(m, n)}, got {K.shape}")
        for name, M in (("A", A), ("B", B), ("K", K)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def closed_loop(self) -> np.ndarray:
        return self.A + self.B @ self.K

    @classmethod
    def scalar(cls, a: float, b: float, k: float = 1.0) -> "SystemModel":
        return cls([[a]], [[b]], [[k]])


@dataclass
class Certificate:
    verdict: str  # certified, not-certified, assumption-violated, numerical-failure
    hbar: int
    gain_mode: str
    gain_sq: float
    multipliers: MultiplierSet | None = None
    S: np.ndarray | None = None
    witness: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"


def spectral_radius(M) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def is_schur(M, tol: float = SCHUR_TOL) -> bool:
    return spectral_radius(M) < 1 - tol


def closed_loop_blocks(model: SystemModel) -> np.ndarray:
    """``[[A+BK, BK], [I-A-BK, -BK]]`` mapping ``(x, e)`` to ``(x(t+1), y)``."""
    Acl = model.closed_loop
    BK = model.B @ model.K
    eye = np.eye(model.n)
    return np.block([[Acl, BK], [eye - Acl, -BK]])


def _outer_factor(model: SystemModel) -> np.ndarray:
    n = model.n
    blocks = closed_loop_blocks(model)
    eye, Z = np.eye(n), np.zeros((n, n))
    return np.vstack([blocks[:n], np.hstack([eye, Z]), blocks[n:], np.hstack([Z, eye])])


def stability_lmi(model: SystemModel, S, X, Y, gain_sq: float) -> np.ndarray:
    """Evaluate the LMI matrix (must be negative definite) for given multipliers."""
    n = model.n
    F = _outer_factor(model)
    Z = np.zeros((n, n))
    S = np.asarray(S, dtype=float)
    pi = gain_pi(X, gain_sq) + passivity_pi(Y)
    middle = np.block([[S, Z, np.zeros((n, 2 * n))],
                       [Z, -S, np.zeros((n, 2 * n))],
                       [np.zeros((2 * n, 2 * n)), pi]])
    M = F.T @ middle @ F
    return 0.5 * (M + M.T)


def model_lmi_problem(model: SystemModel, hbar: int, gain_mode: str = "exact",
                     pin_y_zero: bool = False, epsilon: float = sdp.DEFAULT_EPSILON) -> sdp.LmiProblem:
    """LMI in ``S > 0, X > 0, Y >= 0`` whose feasibility certifies stability for intervals up to ``hbar``.

    The constraint is the congruence of ``diag(S, -S, Pi)`` with the stacked
    rows ``(x(t+1), x(t), y(t), e(t))`` of the interconnection.
    """
    n = model.n
    g = gain_value(hbar, gain_mode)
    blocks = closed_loop_blocks(model)
    eye, Z = np.eye(n), np.zeros((n, n))
    nxt, cur = blocks[:n], np.hstack([eye, Z])
    y_row, e_row = blocks[n:], np.hstack([Z, eye])
    expr = (sdp.ExprBuilder(2 * n)
            .add("S", nxt).add("S", cur, -1.0)
            .add("X", y_row, g).add("X", e_row, -1.0)
            .add("Y", y_row).add("Y", y_row, 1.0, e_row)
            .build())
    variables = (sdp.LmiVariable("S", n, "pd"), sdp.LmiVariable("X", n, "pd"),
                 sdp.LmiVariable("Y", n, "psd"))
    fixed = {"Y": np.zeros((n, n))} if pin_y_zero else {}
    return sdp.LmiProblem(variables, (sdp.LmiConstraint(expr, "<", "stability"),),
                          epsilon=epsilon, fixed=fixed)


def _certificate(sol: sdp.LmiSolution, hbar: int, gain_mode: str, g: float) -> Certificate:
    verdicts = {"feasible": "certified", "infeasible": "not-certified",
                "numerical-failure": "numerical-failure"}
    cert = Certificate(verdicts[sol.status], int(hbar), gain_mode, g,
                       witness=sol.witness if sol.feasible else {},
                       diagnostics=sol.diagnostics)
    if sol.feasible:
        cert.multipliers = MultiplierSet(sol.witness["X"], sol.witness["Y"], g)
        cert.S = sol.witness["S"]
    return cert


def certify_model(model: SystemModel, hbar: int, gain_mode: str = "exact",
                  pin_y_zero: bool = False, epsilon: float = sdp.DEFAULT_EPSILON,
                  solvers=sdp.DEFAULT_SOLVERS) -> Certificate:
    problem = model_lmi_problem(model, hbar, gain_mode, pin_y_zero, epsilon)
    sol = sdp.solve(problem, solvers)
    return _certificate(sol, hbar, gain_mode, gain_value(hbar, gain_mode))


def transfer_function_value(model: SystemModel, omega: float) -> np.ndarray:
    """``G(e^{j omega})`` from ``e`` to ``y`` of the nominal loop."""
    n = model.n
    Acl = model.closed_loop
    BK = (model.B @ model.K).astype(complex)
    z = np.exp(1j * omega)
    resolvent = z * np.eye(n) - Acl
    if np.linalg.cond(resolvent) > 1e12:
        raise np.linalg.LinAlgError(f"resolvent nearly singular at omega={omega}")
    return (np.eye(n) - Acl) @ np.linalg.solve(resolvent, BK) - BK


def frequency_form(model: SystemModel, omega: float, X, Y, gain_sq: float) -> np.ndarray:
    """Hermitian matrix ``[G; I]* Pi [G; I]`` at one frequency."""
    G = transfer_function_value(model, omega)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    H = G.conj().T @ (gain_sq * X + Y) @ G + G.conj().T @ Y + Y @ G - X
    return 0.5 * (H + H.conj().T)


def frequency_check(model: SystemModel, hbar: int, X, Y, grid_size: int = DEFAULT_GRID,
                     gain_mode: str = "exact") -> tuple[bool, float, float]:
    """Grid test of the frequency-domain condition on ``[0, pi]``.

    Returns ``(holds, worst_omega, worst_eigenvalue)``.  A grid can miss a
    violation between points, so a ``True`` here is evidence, not proof.
    """
    if not is_schur(model.closed_loop):
        raise ValueError("A + BK must be Schur for the frequency-domain test")
    g = gain_value(hbar, gain_mode)
    worst_w, worst = 0.0, -np.inf
    for w in np.linspace(0.0, np.pi, grid_size):
        lam = float(np.linalg.eigvalsh(frequency_form(model, w, X, Y, g))[-1])
        if lam > worst:
            worst_w, worst = float(w), lam
    return bool(worst < 0), worst_w, worst


def scalar_region(a: float, b: float) -> bool:
    """Scalar plant with ``K = 1`` certifiable for every interval bound."""
    return -1 < a < 1 and 0 < b < 2 and -1 < a + b < 1


def scalar_condition(a: float, b: float, gain_sq: float, Y: float) -> bool:
    """Closed-form sufficient frequency condition with ``X = 1`` for a scalar plant."""
    return b * b / (1 + a + b) <= b * Y / (gain_sq + Y)
