"""Backend-neutral LMI feasibility problems.

A problem is a set of symmetric matrix variables and affine symmetric
constraints ``const + sum_k L_k V_k R_k``.  Solving maximises a common margin
``t`` on every strict constraint (each scaled by the size of its
coefficients), so the verdict is ``feasible`` iff the optimal margin exceeds
``epsilon``.  Homogeneous problems are normalised by the trace of the
strictly definite variables.  Strictly definite variables are solved as semidefinite
and shifted into the interior afterwards, which the positive margin always
allows.  Every reported witness is re-checked with dense eigenvalue
decompositions, independent of the solver.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

log = logging.getLogger(__name__)

CONES = ("pd", "psd", "free")
SENSES = ("<", "<=", ">", ">=")
DEFAULT_SOLVERS = ("CLARABEL", "CVXOPT", "SCS")
DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True)
class LmiVariable:
    """Symmetric ``dim x dim`` decision matrix.

    ``cone`` is ``"pd"`` (strictly positive definite), ``"psd"`` (positive
    semidefinite, zero allowed) or ``"free"``.
    """

    name: str
    dim: int
    cone: str = "psd"

    def __post_init__(self):
        if self.cone not in CONES:
            raise ValueError(f"unknown cone {self.cone!r}")
        if self.dim < 1:
            raise ValueError("variable dimension must be positive")


@dataclass(frozen=True)
class Term:
    """Contribution ``left @ V @ right`` of variable ``var``."""

    var: str
    left: np.ndarray
    right: np.ndarray


@dataclass(frozen=True)
class AffineExpr:
    const: np.ndarray
    terms: tuple[Term, ...] = ()

    @property
    def size(self) -> int:
        return self.const.shape[0]

    def evaluate(self, values: Mapping[str, np.ndarray]) -> np.ndarray:
        out = np.array(self.const, dtype=float)
        for term in self.terms:
            out = out + term.left @ np.asarray(values[term.var], dtype=float) @ term.right
        return 0.5 * (out + out.T)

    def scaled(self, c: float) -> "AffineExpr":
        return AffineExpr(c * self.const,
                          tuple(Term(t.var, c * t.left, t.right) for t in self.terms))

    def coefficient_scale(self) -> float:
        """Size of the expression: constant norm or largest per-variable coefficient norm."""
        per_var: dict[str, float] = {}
        for t in self.terms:
            per_var[t.var] = per_var.get(t.var, 0.0) + (
                np.linalg.norm(t.left, 2) * np.linalg.norm(t.right, 2))
        return max([np.linalg.norm(self.const, 2), *per_var.values()])


class ExprBuilder:
    """Accumulates congruence terms ``F' V G`` into an :class:`AffineExpr`."""

    def __init__(self, size: int):
        self.size = size
        self.const = np.zeros((size, size))
        self.terms: list[Term] = []

    def add(self, var: str, left, middle_scale: float = 1.0, right=None) -> "ExprBuilder":
        """Add ``c * left' V right`` plus its transpose (or ``c * left' V left``)."""
        left = np.atleast_2d(np.asarray(left, dtype=float))
        if right is None:
            self.terms.append(Term(var, middle_scale * left.T, left))
        else:
            right = np.atleast_2d(np.asarray(right, dtype=float))
            self.terms.append(Term(var, middle_scale * left.T, right))
            self.terms.append(Term(var, middle_scale * right.T, left))
        return self

    def add_const(self, M) -> "ExprBuilder":
        self.const = self.const + np.asarray(M, dtype=float)
        return self

    def build(self) -> AffineExpr:
        return AffineExpr(0.5 * (self.const + self.const.T), tuple(self.terms))


@dataclass(frozen=True)
class LmiConstraint:
    """``expr (sense) 0`` with sense one of ``<``, ``<=``, ``>``, ``>=``."""

    expr: AffineExpr
    sense: str = "<"
    label: str = ""

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")

    @property
    def strict(self) -> bool:
        return self.sense in ("<", ">")

    def positive_form(self) -> AffineExpr:
        """Expression ``G`` with the constraint rewritten as ``G > 0`` / ``G >= 0``."""
        return self.expr.scaled(-1.0) if self.sense in ("<", "<=") else self.expr


@dataclass(frozen=True)
class LmiProblem:
    variables: tuple[LmiVariable, ...]
    constraints: tuple[LmiConstraint, ...]
    epsilon: float = DEFAULT_EPSILON
    fixed: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        dims = {v.name: v.dim for v in self.variables}
        for c in self.constraints:
            k = c.expr.size
            if c.expr.const.shape != (k, k):
                raise ValueError("constraint constant must be square")
            for t in c.expr.terms:
                if t.var not in dims:
                    raise ValueError(f"constraint {c.label!r} references undeclared variable {t.var!r}")
                d = dims[t.var]
                if t.left.shape != (k, d) or t.right.shape != (d, k):
                    raise ValueError(f"term for {t.var!r} in {c.label!r} has shapes "
                                     f"{t.left.shape}, {t.right.shape}; expected ({k},{d}), ({d},{k})")
        for name in self.fixed:
            if name not in dims:
                raise ValueError(f"fixed value for undeclared variable {name!r}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def variable(self, name: str) -> LmiVariable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def homogeneous(self) -> bool:
        return all(not np.any(c.expr.const) for c in self.constraints) and not self.fixed_nonzero

    @property
    def fixed_nonzero(self) -> bool:
        return any(np.any(v) for v in self.fixed.values())


@dataclass
class LmiSolution:
    status: str  # feasible, infeasible, numerical-failure
    witness: dict[str, np.ndarray]
    diagnostics: dict

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


@dataclass
class WitnessCheck:
    ok: bool
    max_violation: float
    details: list[tuple[str, float]]


def _eig_floor(M) -> float:
    # eigenvalues below this magnitude are indistinguishable from zero
    return 64 * np.finfo(float).eps * max(1.0, float(np.linalg.norm(M, 2)))


def verify_witness(problem: LmiProblem, witness: Mapping[str, np.ndarray],
                   tol: float = 1e-8) -> WitnessCheck:
    """Re-check cones and constraints of ``witness`` by eigenvalue decomposition.

    Strict conditions need a minimum eigenvalue above round-off level;
    nonstrict ones tolerate ``-tol`` relative to the matrix scale.  The
    reported violation is ``max(0, -lambda_min)`` of each normalised
    condition.
    """
    details = []
    ok = True
    values = dict(witness)
    for v in problem.variables:
        if v.name not in values:
            raise ValueError(f"witness lacks variable {v.name!r}")
        V = np.asarray(values[v.name], dtype=float)
        if V.shape != (v.dim, v.dim):
            raise ValueError(f"witness {v.name!r} has shape {V.shape}, expected {(v.dim, v.dim)}")
        if v.cone == "free":
            continue
        V = 0.5 * (V + V.T)
        lam = float(np.linalg.eigvalsh(V)[0])
        if v.cone == "pd":
            ok &= lam > _eig_floor(V)
        else:
            ok &= lam >= -tol * max(1.0, float(np.linalg.norm(V, 2)))
        details.append((v.name, max(0.0, -lam)))
    for i, c in enumerate(problem.constraints):
        G = c.positive_form().evaluate(values)
        scale = max(c.expr.coefficient_scale(), 1e-300)
        lam = float(np.linalg.eigvalsh(G)[0])
        if c.strict:
            ok &= lam > _eig_floor(G)
        else:
            ok &= lam >= -tol * scale
        details.append((c.label or f"constraint {i}", max(0.0, -lam / scale)))
    worst = max((d for _, d in details), default=0.0)
    return WitnessCheck(bool(ok), worst, details)


def _project(V: np.ndarray, floor: float = 0.0) -> np.ndarray:
    V = 0.5 * (V + V.T)
    w, Q = np.linalg.eigh(V)
    return (Q * np.maximum(w, floor)) @ Q.T


def _variable_scales(problem: LmiProblem) -> dict[str, float]:
    """Largest coefficient norm of each variable over the normalised constraints.

    Solving for ``d_V V`` instead of ``V`` puts every variable on the same
    footing, which matters when a feasible point mixes very large and very
    small multipliers.
    """
    scales = {v.name: 0.0 for v in problem.variables}
    for c in problem.constraints:
        cs = max(c.expr.coefficient_scale(), 1e-300)
        per_var: dict[str, float] = {}
        for t in c.expr.terms:
            per_var[t.var] = per_var.get(t.var, 0.0) + (
                np.linalg.norm(t.left, 2) * np.linalg.norm(t.right, 2)) / cs
        for name, w in per_var.items():
            scales[name] = max(scales[name], w)
    return {k: (w if w > 0 else 1.0) for k, w in scales.items()}


def _build_cvxpy(problem: LmiProblem, scales: dict[str, float]):
    import cvxpy as cp

    # cvxpy variables hold the scaled matrices d_V V
    cvars = {v.name: cp.Variable((v.dim, v.dim), symmetric=True, name=v.name)
             for v in problem.variables}
    cons = []
    for v in problem.variables:
        if v.name in problem.fixed:
            cons.append(cvars[v.name] == scales[v.name] * np.asarray(problem.fixed[v.name], dtype=float))
        if v.cone in ("pd", "psd"):
            cons.append(cvars[v.name] >> 0)
    strict = [c for c in problem.constraints if c.strict]
    t = cp.Variable(name="margin") if strict else None
    for c in problem.constraints:
        G = c.positive_form()
        cs = max(G.coefficient_scale(), 1e-300)
        expr = G.const / cs
        for term in G.terms:
            expr = expr + (term.left / (cs * scales[term.var])) @ cvars[term.var] @ term.right
        expr = 0.5 * (expr + expr.T)
        if c.strict:
            cons.append(expr >> t * np.eye(G.size))
        else:
            cons.append(expr >> 0)
    if t is not None:
        # semidefinite variables stay out of the normalisation so they can grow freely
        definite = [v for v in problem.variables if v.cone == "pd" and v.name not in problem.fixed]
        if problem.homogeneous and definite:
            cons.append(sum(cp.trace(cvars[v.name]) for v in definite) == 1)
        cons.append(t <= 1)
        objective = cp.Maximize(t)
    else:
        objective = cp.Minimize(0)
    return cp.Problem(objective, cons), cvars, t


def _repair(problem: LmiProblem, values: dict, margin: float, scales: dict[str, float]) -> float:
    """Project onto the cones and shift strict variables inside.

    In scaled coordinates every coefficient has norm at most one, so shifting
    each of the ``n_pd`` strict variables by ``margin / (2 n_pd)`` keeps half
    the margin.  Returns that shift.
    """
    n_pd = sum(1 for v in problem.variables if v.cone == "pd" and v.name not in problem.fixed)
    shift = 0.5 * margin / max(n_pd, 1)
    for v in problem.variables:
        if v.name in problem.fixed:
            values[v.name] = np.asarray(problem.fixed[v.name], dtype=float)
        elif v.cone == "psd":
            values[v.name] = _project(values[v.name])
        elif v.cone == "pd":
            values[v.name] = _project(values[v.name]) + (shift / scales[v.name]) * np.eye(v.dim)
    return shift


def solve(problem: LmiProblem, solvers=DEFAULT_SOLVERS, verify_tol: float = 1e-8) -> LmiSolution:
    """Solve ``problem``; never raises on solver trouble.

    Returns ``numerical-failure`` when every backend errors or when a positive
    margin does not survive independent verification.
    """
    import cvxpy as cp

    attempts = []
    for name in solvers:
        if name not in cp.installed_solvers():
            continue
        scales = _variable_scales(problem)
        prob, cvars, t = _build_cvxpy(problem, scales)
        t0 = time.perf_counter()
        try:
            prob.solve(solver=name)
        except (cp.error.SolverError, ArithmeticError, ValueError) as exc:
            attempts.append({"solver": name, "error": str(exc)})
            log.debug("solver %s failed: %s", name, exc)
            continue
        elapsed = time.perf_counter() - t0
        diag = {"solver": name, "solver_status": prob.status, "solve_time": elapsed,
                "epsilon": problem.epsilon, "attempts": attempts}
        if prob.status in ("infeasible", "infeasible_inaccurate"):
            return LmiSolution("infeasible", {}, diag)
        if prob.status not in ("optimal", "optimal_inaccurate"):
            attempts.append({"solver": name, "error": f"status {prob.status}"})
            continue
        values = {k: np.array(v.value, dtype=float) / scales[k] for k, v in cvars.items()}
        margin = float(t.value) if t is not None else 0.0
        diag["margin"] = margin
        if t is not None and margin <= problem.epsilon:
            diag["max_violation"] = max(0.0, -margin)
            return LmiSolution("infeasible", values, diag)
        diag["shift"] = _repair(problem, values, margin, scales) if t is not None else 0.0
        check = verify_witness(problem, values, verify_tol)
        diag["max_violation"] = check.max_violation
        diag["verified"] = check.ok
        if check.ok:
            return LmiSolution("feasible", values, diag)
        attempts.append({"solver": name, "error": "witness failed verification",
                         "margin": margin})
    return LmiSolution("numerical-failure", {}, {"attempts": attempts, "epsilon": problem.epsilon})


def add_scalar_term(builder: ExprBuilder, var: str, C) -> ExprBuilder:
    """Add ``v * C`` for a ``1 x 1`` variable ``v`` as a sum of rank-one terms."""
    C = np.asarray(C, dtype=float)
    w, Q = np.linalg.eigh(0.5 * (C + C.T))
    for lam, q in zip(w, Q.T):
        if lam != 0:
            builder.terms.append(Term(var, lam * q[:, None], q[None, :]))
    return builder
