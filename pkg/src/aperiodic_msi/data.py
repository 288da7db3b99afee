"""Data-driven certificates from one noisy state-input trajectory.

Every pair ``[A B]`` that explains the data under the disturbance bound
forms a set described by a quadratic matrix inequality with the data matrix
``P_AB``.  Stability is certified for the whole set, hence for the unknown
true system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import sdp
from .delay import gain_value
from .iqc import gain_pi, passivity_pi
from .model import Certificate, _certificate

COND_LIMIT = 1e12


class AssumptionViolation(ValueError):
    """Raised when the data do not admit the QMI parametrisation."""


@dataclass(frozen=True)
class DisturbanceModel:
    """Quadratic bound ``[D'; I]' [[Qd, Sd], [Sd', Rd]] [D'; I] >= 0`` on ``D = [d(0) ... d(N-1)]``."""

    Qd: np.ndarray
    Sd: np.ndarray
    Rd: np.ndarray
    Bd: np.ndarray

    def __post_init__(self):
        Qd = np.atleast_2d(np.asarray(self.Qd, dtype=float))
        Rd = np.atleast_2d(np.asarray(self.Rd, dtype=float))
        Bd = np.atleast_2d(np.asarray(self.Bd, dtype=float))
        N, nd = Qd.shape[0], Rd.shape[0]
        Sd = np.asarray(self.Sd, dtype=float).reshape(N, nd)
        if Qd.shape != (N, N) or Rd.shape != (nd, nd) or Bd.shape[1] != nd:
            raise ValueError("inconsistent disturbance model dimensions")
        try:
            np.linalg.cholesky(-0.5 * (Qd + Qd.T))
        except np.linalg.LinAlgError:
            raise ValueError("Qd must be negative definite") from None
        if np.linalg.matrix_rank(Bd) < nd:
            raise ValueError("Bd must have full column rank")
        for name, M in (("Qd", Qd), ("Sd", Sd), ("Rd", Rd), ("Bd", Bd)):
            object.__setattr__(self, name, M)

    @property
    def N(self) -> int:
        return self.Qd.shape[0]

    @property
    def nd(self) -> int:
        return self.Rd.shape[0]

    def contains(self, D, tol: float = 1e-10) -> bool:
        """Whether a disturbance sequence ``D`` (``nd x N``) satisfies the bound."""
        D = np.atleast_2d(np.asarray(D, dtype=float))
        M = D @ self.Qd @ D.T + D @ self.Sd + self.Sd.T @ D.T + self.Rd
        M = 0.5 * (M + M.T)
        return float(np.linalg.eigvalsh(M)[0]) >= -tol * max(1.0, np.linalg.norm(self.Rd, 2))


def norm_bound_disturbance(N: int, n_d: int, dbar: float, Bd) -> DisturbanceModel:
    """Energy bound ``D D' <= dbar^2 N I`` implied by ``||d(t)|| <= dbar``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if dbar < 0:
        raise ValueError("dbar must be nonnegative")
    return DisturbanceModel(-np.eye(N), np.zeros((N, n_d)), dbar ** 2 * N * np.eye(n_d), Bd)


@dataclass(frozen=True)
class DataSet:
    Xplus: np.ndarray
    X: np.ndarray
    U: np.ndarray
    disturbance: DisturbanceModel

    def __post_init__(self):
        Xp = np.atleast_2d(np.asarray(self.Xplus, dtype=float))
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        U = np.atleast_2d(np.asarray(self.U, dtype=float))
        N = X.shape[1]
        if N < 1:
            raise ValueError("data set needs at least one sample")
        if Xp.shape != X.shape or U.shape[1] != N:
            raise ValueError(f"shapes X+ {Xp.shape}, X {X.shape}, U {U.shape} disagree")
        if self.disturbance.N != N:
            raise ValueError(f"disturbance model is for N={self.disturbance.N}, data has N={N}")
        if self.disturbance.Bd.shape[0] != X.shape[0]:
            raise ValueError("Bd row count must equal the state dimension")
        object.__setattr__(self, "Xplus", Xp)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "U", U)

    @classmethod
    def from_trajectory(cls, x, u, disturbance: DisturbanceModel) -> "DataSet":
        """Build from states ``x(0..N)`` (``(N+1) x n``) and inputs ``u(0..N-1)`` (``N x m``)."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if u.ndim == 1:
            u = u[:, None]
        if x.shape[0] != u.shape[0] + 1:
            raise ValueError("need one more state sample than input samples")
        return cls(x[1:].T, x[:-1].T, u.T, disturbance)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @property
    def N(self) -> int:
        return self.X.shape[1]


def data_matrix(ds: DataSet) -> np.ndarray:
    """``P_AB = [[-X, 0], [-U, 0], [X+, Bd]] [[Qd, Sd], [Sd', Rd]] (*)'``."""
    dm = ds.disturbance
    H = np.vstack([ds.X, ds.U])
    nh, nd = H.shape[0], dm.nd
    left = np.block([[-H, np.zeros((nh, nd))], [ds.Xplus, dm.Bd]])
    mid = np.block([[dm.Qd, dm.Sd], [dm.Sd.T, dm.Rd]])
    P = left @ mid @ left.T
    return 0.5 * (P + P.T)


def inertia(M, rtol: float = None) -> tuple[int, int, int]:
    """(negative, zero, positive) eigenvalue counts."""
    w = np.linalg.eigvalsh(M)
    if rtol is None:
        rtol = M.shape[0] * np.finfo(float).eps
    tol = rtol * max(np.max(np.abs(w)), 1e-300)
    return int(np.sum(w < -tol)), int(np.sum(np.abs(w) <= tol)), int(np.sum(w > tol))


@dataclass(frozen=True)
class QmiSet:
    """QMI description of all ``[A B]`` consistent with the data.

    Besides ``P_AB`` and the blocks of its inverse, it stores the equivalent
    ellipsoid ``(W - W_c) H_w H_w' (W - W_c)' <= R_c`` around the weighted
    least-squares fit ``W_c``, which is what the solver works with.
    """

    n: int
    m: int
    P: np.ndarray
    Qt: np.ndarray
    St: np.ndarray
    Rt: np.ndarray
    inertia: tuple[int, int, int]
    condition: float
    center: np.ndarray
    radius: np.ndarray
    weight: np.ndarray
    validated: bool = False

    @property
    def Pinv(self) -> np.ndarray:
        return np.block([[self.Qt, self.St], [self.St.T, self.Rt]])


def _ellipsoid(ds: DataSet):
    dm = ds.disturbance
    G = np.linalg.cholesky(-dm.Qd)  # -Qd = G G'
    Qd_inv_Sd = -linalg.cho_solve((G, True), dm.Sd)
    H = np.vstack([ds.X, ds.U]) @ G
    Yw = (ds.Xplus + dm.Bd @ Qd_inv_Sd.T) @ G
    R0 = dm.Rd - dm.Sd.T @ Qd_inv_Sd
    Wc = np.linalg.lstsq(H.T, Yw.T, rcond=None)[0].T
    res = Yw - Wc @ H
    Rc = dm.Bd @ R0 @ dm.Bd.T - res @ res.T
    return Wc, 0.5 * (Rc + Rc.T), H @ H.T


def build_qmi(ds: DataSet, cond_limit: float = COND_LIMIT, validate: bool = True) -> QmiSet:
    """Assemble ``P_AB``, invert it and check invertibility and inertia.

    Raises :class:`AssumptionViolation` if ``P_AB`` is singular, has other
    than ``n_d`` positive eigenvalues, or its condition number exceeds
    ``cond_limit``.
    """
    n, m, nd = ds.n, ds.m, ds.disturbance.nd
    P = data_matrix(ds)
    w, V = np.linalg.eigh(P)
    inert = inertia(P)
    absw = np.abs(w)
    cond = float(absw.max() / absw.min()) if absw.min() > 0 else np.inf
    if validate:
        if inert[1] or inert != (n + m, 0, nd):
            raise AssumptionViolation(
                f"P_AB inertia {inert} differs from required {(n + m, 0, nd)}")
        if cond > cond_limit:
            raise AssumptionViolation(
                f"P_AB condition number {cond:.3g} exceeds {cond_limit:.3g}")
    with np.errstate(divide="ignore"):
        Pinv = (V / w) @ V.T
    Pinv = 0.5 * (Pinv + Pinv.T)
    k = n + m
    Wc, Rc, weight = _ellipsoid(ds)
    if validate:
        if float(np.linalg.eigvalsh(Rc)[0]) <= 0 or float(np.linalg.eigvalsh(weight)[0]) <= 0:
            raise AssumptionViolation("data ellipsoid is degenerate")
    return QmiSet(n, m, P, Pinv[:k, :k], Pinv[:k, k:], Pinv[k:, k:], inert, cond,
                  Wc, Rc, weight, validated=validate)


def qmi_value(A, B, P) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Z = np.vstack([A.T, B.T, np.eye(A.shape[0])])
    M = Z.T @ P @ Z
    return 0.5 * (M + M.T)


def membership(A, B, ds: DataSet, rtol: float = 1e-12) -> bool:
    """Whether ``[A B]`` lies in the data-consistent set (primal QMI)."""
    P = data_matrix(ds)
    M = qmi_value(A, B, P)
    Z2 = 1.0 + np.linalg.norm(np.hstack([np.atleast_2d(A), np.atleast_2d(B)]), 2) ** 2
    return float(np.linalg.eigvalsh(M)[0]) >= -rtol * np.linalg.norm(P, 2) * Z2


def membership_dual(A, B, qmi: QmiSet, rtol: float = 1e-12) -> bool:
    """Same test through the inverse blocks: ``[W; I]' [[-Rt, St'], [St, -Qt]] [W; I] >= 0``."""
    W = np.hstack([np.atleast_2d(A), np.asarray(B, dtype=float).reshape(qmi.n, -1)])
    Z = np.vstack([W, np.eye(qmi.n + qmi.m)])
    mid = np.block([[-qmi.Rt, qmi.St.T], [qmi.St, -qmi.Qt]])
    M = Z.T @ mid @ Z
    M = 0.5 * (M + M.T)
    Z2 = 1.0 + np.linalg.norm(W, 2) ** 2
    return float(np.linalg.eigvalsh(M)[0]) >= -rtol * np.linalg.norm(mid, 2) * Z2


def _lft_rows(K, qmi: QmiSet):
    n, m = qmi.n, qmi.m
    K = np.asarray(K, dtype=float).reshape(m, n)
    eye, Z = np.eye(n), np.zeros((n, n))
    Zx = np.vstack([eye, K])
    Ze = np.vstack([np.zeros((n, n)), K])
    return eye, Z, Zx, Ze


def _sqrt_psd(M, inverse: bool = False) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    w = np.maximum(w, 0.0)
    d = 1.0 / np.sqrt(w) if inverse else np.sqrt(w)
    return (V * d) @ V.T


def data_lmi_problem(K, qmi: QmiSet, hbar: int, gain_mode: str = "exact",
                     epsilon: float = sdp.DEFAULT_EPSILON) -> sdp.LmiProblem:
    """Data-driven LMI in ``S > 0, X > 0, Y >= 0`` and a scalar ``lam > 0``.

    Columns are ``(x, e, w~)``: the uncertain next state is written as
    ``x(t+1) = W_c z + R_c^{1/2} w~`` with ``z = [x; K(x + e)]`` and
    ``||w~|| <= ||H_w^{-1} z||``.  This is a congruence transformation of the
    condition built on the inverse blocks of ``P_AB`` (see
    :func:`inverse_form_lmi`), with the data multiplier scaled by ``lam``,
    and is much better conditioned.
    """
    if not qmi.validated:
        raise AssumptionViolation("QMI set was built without validating its assumptions")
    n = qmi.n
    g = gain_value(hbar, gain_mode)
    eye, Z, Zx, Ze = _lft_rows(K, qmi)
    Rh = _sqrt_psd(qmi.radius)
    Wh = _sqrt_psd(qmi.weight, inverse=True)
    nxt = np.hstack([qmi.center @ Zx, qmi.center @ Ze, Rh])
    cur = np.hstack([eye, Z, Z])
    y_row = cur - nxt
    e_row = np.hstack([Z, eye, Z])
    z_row = Wh @ np.hstack([Zx, Ze, np.zeros((n + qmi.m, n))])
    w_row = np.hstack([Z, Z, eye])
    b = (sdp.ExprBuilder(3 * n)
         .add("S", nxt).add("S", cur, -1.0)
         .add("X", y_row, g).add("X", e_row, -1.0)
         .add("Y", y_row).add("Y", y_row, 1.0, e_row))
    sdp.add_scalar_term(b, "lam", z_row.T @ z_row - w_row.T @ w_row)
    variables = (sdp.LmiVariable("S", n, "pd"), sdp.LmiVariable("X", n, "pd"),
                 sdp.LmiVariable("Y", n, "psd"), sdp.LmiVariable("lam", 1, "pd"))
    return sdp.LmiProblem(variables, (sdp.LmiConstraint(b.build(), "<", "stability"),),
                          epsilon=epsilon)


def inverse_form_lmi(K, qmi: QmiSet, gain_sq: float, S, X, Y) -> np.ndarray:
    """Evaluate the data-driven LMI on columns ``(x, e, w)`` with the inverse blocks of ``P_AB``.

    Middle matrix ``diag(S, -S, Pi, [[-Qt, St], [St', -Rt]])``, rows
    ``(x(t+1), x, y, e, z, w)``.
    """
    n, m = qmi.n, qmi.m
    eye, Z, Zx, Ze = _lft_rows(K, qmi)
    F = np.vstack([
        np.hstack([Z, Z, eye]),
        np.hstack([eye, Z, Z]),
        np.hstack([eye, Z, -eye]),
        np.hstack([Z, eye, Z]),
        np.hstack([Zx, Ze, np.zeros((n + m, n))]),
        np.hstack([Z, Z, eye]),
    ])
    S = np.atleast_2d(S)
    pi = gain_pi(X, gain_sq) + passivity_pi(Y)
    data = np.block([[-qmi.Qt, qmi.St], [qmi.St.T, -qmi.Rt]])
    mid = linalg.block_diag(S, -S, pi, data)
    M = F.T @ mid @ F
    return 0.5 * (M + M.T)


def lft_transform(K, qmi: QmiSet) -> np.ndarray:
    """Map ``(x, e, w~) -> (x, e, w)`` relating the two forms of the data-driven LMI."""
    n = qmi.n
    eye, Z, Zx, Ze = _lft_rows(K, qmi)
    return np.block([[eye, Z, Z], [Z, eye, Z],
                     [qmi.center @ Zx, qmi.center @ Ze, _sqrt_psd(qmi.radius)]])


def certify_data(ds: DataSet, K, hbar: int, gain_mode: str = "exact",
                 epsilon: float = sdp.DEFAULT_EPSILON, qmi: QmiSet | None = None,
                 solvers=sdp.DEFAULT_SOLVERS) -> Certificate:
    """Certify stability for every system consistent with ``ds``."""
    g = gain_value(hbar, gain_mode)
    if qmi is None:
        try:
            qmi = build_qmi(ds)
        except AssumptionViolation as exc:
            return Certificate("assumption-violated", int(hbar), gain_mode, g,
                               diagnostics={"reason": str(exc)})
    sol = sdp.solve(data_lmi_problem(K, qmi, hbar, gain_mode, epsilon), solvers)
    cert = _certificate(sol, hbar, gain_mode, g)
    cert.diagnostics["qmi_condition"] = qmi.condition
    return cert
