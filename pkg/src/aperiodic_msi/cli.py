"""Command-line entry point ``aperiodic-msi``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io, msi
from .data import AssumptionViolation, DataSet, build_qmi, certify_data
from .delay import GAIN_MODES, SamplingPattern, delay_sequence, gain_bundle
from .model import certify_model, frequency_check, is_schur
from .simulate import closed_loop, falsify, generate_experiment

EXIT_OK, EXIT_USAGE, EXIT_NOT_CERTIFIED, EXIT_ASSUMPTION, EXIT_NUMERICAL = 0, 1, 2, 3, 4
VERDICT_EXIT = {"certified": EXIT_OK, "not-certified": EXIT_NOT_CERTIFIED,
                "assumption-violated": EXIT_ASSUMPTION, "numerical-failure": EXIT_NUMERICAL}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print("\n".join(lines))


def _dataset(args, model):
    x, u = io.read_trajectory_csv(args.data)
    N = u.shape[0]
    if args.disturbance:
        dist = io.load_disturbance(args.disturbance, N, model.n)
    elif args.dbar is not None:
        dist = io.load_disturbance({"dbar": args.dbar, "Bd": args.bd_scale}, N, model.n)
    else:
        raise ValueError("data mode needs --disturbance FILE or --dbar")
    return DataSet.from_trajectory(x, u, dist)


def cmd_gain(args) -> int:
    rows, lines = [], [f"{'hbar':>6} {'exact':>14} {'frobenius':>14} {'legacy':>14} "
                       f"{'ratio_exact':>12} {'ratio_frob':>12}"]
    for h in args.hbar:
        b = gain_bundle(h)
        r_exact, r_frob = b.ratios()
        rows.append({"hbar": h, "exact": b.exact_sq_gain, "frobenius": b.frobenius_sq_gain,
                     "legacy": b.legacy_sq_gain, "ratio_exact": r_exact, "ratio_frobenius": r_frob})
        lines.append(f"{h:>6} {b.exact_sq_gain:>14.4f} {b.frobenius_sq_gain:>14.4f} "
                     f"{b.legacy_sq_gain:>14.4f} {r_exact:>12.4f} {r_frob:>12.4f}")
    _emit(args, {"gains": io._jsonable(rows)}, lines)
    return EXIT_OK


def _certifier(args, model):
    opts = {"epsilon": args.epsilon}
    if args.mode == "model":
        return lambda h: certify_model(model, h, args.gain_mode, **opts)
    ds = _dataset(args, model)
    qmi = build_qmi(ds)
    return lambda h: certify_data(ds, model.K, h, args.gain_mode, qmi=qmi, **opts)


def cmd_msi(args) -> int:
    model, _ = io.load_system(args.system)
    try:
        certify = _certifier(args, model)
    except AssumptionViolation as exc:
        _emit(args, {"verdict": "assumption-violated", "reason": str(exc)},
              [f"assumption violated: {exc}"])
        return EXIT_ASSUMPTION
    certs = {}

    def certifier(h):
        cert = certify(h)
        certs[h] = cert
        if cert.verdict == "numerical-failure":
            raise RuntimeError(f"numerical failure at hbar={h}")
        return cert.certified

    search = msi.linear_search if args.search == "linear" else msi.exponential_search
    try:
        res = search(certifier, cap=args.cap)
    except RuntimeError as exc:
        _emit(args, {"verdict": "numerical-failure", "reason": str(exc)}, [str(exc)])
        return EXIT_NUMERICAL
    payload = {"mode": args.mode, "gain_mode": args.gain_mode, "search": args.search,
               "hbar_msi": res.hbar_msi, "cap_exhausted": res.cap_exhausted,
               "calls": res.calls,
               "certificate": io.certificate_to_dict(certs[res.hbar_msi]) if res.found else None}
    lines = [f"hbar_MSI = {res.hbar_msi}" + (" (cap reached)" if res.cap_exhausted else ""),
             f"mode={args.mode} gain={args.gain_mode} search={args.search} calls={res.calls}"]
    _emit(args, payload, lines)
    return EXIT_OK if res.found else EXIT_NOT_CERTIFIED


def cmd_certify(args) -> int:
    model, extras = io.load_system(args.system)
    hbar = args.hbar or extras.get("hbar")
    if hbar is None:
        raise ValueError("no --hbar given and none in the system file")
    if args.mode == "model":
        cert = certify_model(model, hbar, args.gain_mode, epsilon=args.epsilon)
    else:
        cert = certify_data(_dataset(args, model), model.K, hbar, args.gain_mode,
                            epsilon=args.epsilon)
    payload = io.certificate_to_dict(cert)
    lines = [f"hbar={hbar} gain={args.gain_mode}: {cert.verdict}"]
    if cert.certified and args.mode == "model" and args.grid and is_schur(model.closed_loop):
        ok, w, lam = frequency_check(model, hbar, cert.multipliers.X, cert.multipliers.Y,
                                      args.grid, args.gain_mode)
        payload["frequency_check"] = {"holds": ok, "worst_omega": w, "worst_eig": lam,
                                      "grid": args.grid}
        lines.append(f"frequency grid ({args.grid} pts): {'ok' if ok else 'violated'} "
                     f"(worst omega={w:.4f}, eig={lam:.3e})")
    _emit(args, payload, lines)
    return VERDICT_EXIT[cert.verdict]


def cmd_simulate(args) -> int:
    model, _ = io.load_system(args.system)
    rng = np.random.default_rng(args.seed)
    x0 = np.asarray(args.x0, dtype=float) if args.x0 else rng.standard_normal(model.n)
    pattern = SamplingPattern.random(args.hbar, args.horizon, rng)
    xs = closed_loop(model, pattern, x0, args.horizon)
    growth = float(np.linalg.norm(xs[-1]) / np.linalg.norm(x0))
    payload = {"hbar": args.hbar, "horizon": args.horizon, "growth": growth}
    lines = [f"random pattern: ||x(T)||/||x0|| = {growth:.6g}"]
    if args.falsify:
        res = falsify(model, args.hbar, args.falsify, args.horizon, seed=args.seed)
        payload["falsification"] = {"growth": res.growth, "trials": res.trials,
                                    "pattern": list(res.pattern.intervals)}
        lines.append(f"falsification ({res.trials} patterns): worst growth {res.growth:.6g} "
                     "(heuristic; no growth is evidence, not proof)")
    if args.out:
        tau = delay_sequence(pattern, args.horizon)
        u = np.array([model.K @ xs[t - tau[t]] for t in range(args.horizon)])
        io.write_trajectory_csv(args.out, xs, u)
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_generate(args) -> int:
    model, _ = io.load_system(args.system)
    Bd = args.bd_scale * np.eye(model.n)
    exp = generate_experiment(model, args.N, (args.input_min, args.input_max), args.dbar, Bd,
                              seed=args.seed)
    io.write_trajectory_csv(args.out, exp.x, exp.u)
    lines = [f"wrote {args.N} samples to {args.out}"]
    if args.disturbance_out:
        with open(args.disturbance_out, "w") as fh:
            json.dump({"dbar": args.dbar, "Bd": Bd.tolist()}, fh, indent=2)
        lines.append(f"wrote disturbance bound to {args.disturbance_out}")
    _emit(args, {"samples": args.N, "out": args.out, "seed": args.seed}, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="aperiodic-msi", description=__doc__)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[common], **k)

    g = sub.add_parser("gain", help="delay operator gain table")
    g.add_argument("hbar", type=_positive_int, nargs="+")
    g.set_defaults(func=cmd_gain)

    def analysis_opts(sp):
        sp.add_argument("system", help="system JSON with A, B, K")
        sp.add_argument("--mode", choices=("model", "data"), default="model")
        sp.add_argument("--gain-mode", choices=GAIN_MODES, default="exact")
        sp.add_argument("--epsilon", type=float, default=1e-9)
        sp.add_argument("--data", help="trajectory CSV (data mode)")
        sp.add_argument("--disturbance", help="disturbance JSON (data mode)")
        sp.add_argument("--dbar", type=float, help="norm bound on the disturbance")
        sp.add_argument("--bd-scale", type=float, default=1.0, help="Bd = scale * I")

    m = sub.add_parser("msi", help="estimate the maximum sampling interval")
    analysis_opts(m)
    m.add_argument("--search", choices=("linear", "exponential"), default="exponential")
    m.add_argument("--cap", type=_positive_int, default=msi.DEFAULT_CAP)
    m.set_defaults(func=cmd_msi)

    c = sub.add_parser("certify", help="certify stability for one interval bound")
    analysis_opts(c)
    c.add_argument("--hbar", type=_positive_int)
    c.add_argument("--grid", type=int, default=0, help="also run the frequency check on this many points")
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("simulate", help="simulate the sampled loop")
    s.add_argument("system")
    s.add_argument("--hbar", type=_positive_int, required=True)
    s.add_argument("--horizon", type=_positive_int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--x0", type=float, nargs="+")
    s.add_argument("--falsify", type=int, default=0, metavar="TRIALS")
    s.add_argument("--out", help="write the trajectory CSV here")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("generate", help="generate an open-loop experiment")
    e.add_argument("system")
    e.add_argument("--N", type=_positive_int, default=1000)
    e.add_argument("--dbar", type=float, default=0.0)
    e.add_argument("--bd-scale", type=float, default=1.0)
    e.add_argument("--input-min", type=float, default=-10.0)
    e.add_argument("--input-max", type=float, default=10.0)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    e.add_argument("--disturbance-out")
    e.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
