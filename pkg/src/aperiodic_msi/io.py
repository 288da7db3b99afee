"""File formats: system JSON, trajectory CSV, disturbance JSON, certificate reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .data import DisturbanceModel, norm_bound_disturbance
from .model import Certificate, SystemModel


def load_system(path) -> tuple[SystemModel, dict]:
    """Read ``{"A": [[...]], "B": [[...]], "K": [[...]], "hbar": optional}``."""
    cfg = json.loads(Path(path).read_text())
    missing = [k for k in ("A", "B", "K") if k not in cfg]
    if missing:
        raise ValueError(f"system file lacks fields {missing}")
    model = SystemModel(cfg["A"], cfg["B"], cfg["K"])
    extras = {k: v for k, v in cfg.items() if k not in ("A", "B", "K")}
    return model, extras


def save_system(path, model: SystemModel, **extras) -> None:
    cfg = {"A": model.A.tolist(), "B": model.B.tolist(), "K": model.K.tolist(), **extras}
    Path(path).write_text(json.dumps(cfg, indent=2) + "\n")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trajectory_csv(path, x, u) -> None:
    """Header ``t,x1..xn,u1..um``; the last row carries ``x(N)`` without an input."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.asarray(u, dtype=float).reshape(x.shape[0] - 1, -1)
    n, m = x.shape[1], u.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *[f"x{i + 1}" for i in range(n)], *[f"u{j + 1}" for j in range(m)]])
        for t in range(x.shape[0]):
            inputs = [_fmt(v) for v in u[t]] if t < u.shape[0] else [""] * m
            w.writerow([t, *[_fmt(v) for v in x[t]], *inputs])


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Return states ``(N+1, n)`` and inputs ``(N, m)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = rows[0]
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    ucols = [i for i, h in enumerate(header) if h.startswith("u")]
    if not xcols or not ucols or header[0] != "t":
        raise ValueError(f"unexpected trajectory header {header}")
    body = rows[1:]
    x = np.array([[float(r[i]) for i in xcols] for r in body])
    u_rows = [r for r in body if all(r[i] != "" for i in ucols)]
    u = np.array([[float(r[i]) for i in ucols] for r in u_rows])
    if len(u_rows) == len(body):  # input on the last row is ignored
        u = u[:-1]
    if u.shape[0] != x.shape[0] - 1:
        raise ValueError("inputs must be present on every row except possibly the last")
    return x, u


def load_disturbance(cfg, N: int, n: int) -> DisturbanceModel:
    """Disturbance config: ``{"dbar", "Bd"}`` (norm bound) or ``{"Qd", "Sd", "Rd", "Bd"}``.

    ``Bd`` may be a matrix or a scalar multiple of the identity; it defaults
    to the identity.
    """
    if not isinstance(cfg, dict):
        cfg = json.loads(Path(cfg).read_text())
    Bd = cfg.get("Bd", 1.0)
    Bd = np.asarray(Bd, dtype=float)
    if Bd.ndim == 0:
        Bd = float(Bd) * np.eye(n)
    if "dbar" in cfg:
        return norm_bound_disturbance(N, Bd.shape[1], float(cfg["dbar"]), Bd)
    if all(k in cfg for k in ("Qd", "Rd")):
        Rd = np.atleast_2d(np.asarray(cfg["Rd"], dtype=float))
        Sd = cfg.get("Sd", np.zeros((N, Rd.shape[0])))
        return DisturbanceModel(cfg["Qd"], Sd, Rd, Bd)
    raise ValueError("disturbance config needs 'dbar' or 'Qd'/'Rd'")


def certificate_to_dict(cert: Certificate) -> dict:
    out = {
        "verdict": cert.verdict,
        "hbar": cert.hbar,
        "gain_mode": cert.gain_mode,
        "gain_sq": cert.gain_sq,
        "witness": {k: np.asarray(v).tolist() for k, v in cert.witness.items()},
        "diagnostics": _jsonable(cert.diagnostics),
    }
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None  # strict JSON has no nan/inf
    return obj
