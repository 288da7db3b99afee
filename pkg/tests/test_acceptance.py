"""Acceptance criteria, each checked at its stated tolerance and time budget.

One PASS/FAIL line per criterion is printed in the pytest terminal summary,
or directly when this file is run as a script.
"""
import time

import numpy as np
import pytest

from aperiodic_msi.data import build_qmi, certify_data, membership, membership_dual, qmi_value, data_matrix
from aperiodic_msi.delay import SamplingPattern, apply_delay, exact_gain, gain_bundle, lifted_matrix
from aperiodic_msi.iqc import MultiplierSet, assemble_pi, check_iqc, check_passivity, gain_pi, passivity_pi
from aperiodic_msi.model import SystemModel, certify_model
from aperiodic_msi.msi import exponential_search, linear_search
from aperiodic_msi.simulate import falsify, generate_experiment
from conftest import A_EX, B_EX, K_EX

RESULTS: dict[str, tuple[bool, str]] = {}
EXAMPLE = SystemModel(A_EX, B_EX, K_EX)
REPLICA_SEED = 42
DBARS = (0.001, 0.002, 0.005, 0.01)
EXACT_REF = (136, 135, 134, 128)
LEGACY_REF = (122, 122, 121, 115)


def record(name, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    RESULTS[name] = (ok, f"{detail} [{elapsed:.1f}s / {budget:.0f}s]")
    assert ok, RESULTS[name][1]


def test_criterion_1_gain_chain():
    t0 = time.perf_counter()
    bad = []
    for h in range(1, 61):
        b = gain_bundle(h)
        if not (b.exact_sq_gain <= b.frobenius_sq_gain + 1e-9 <= b.legacy_sq_gain + 2e-9):
            bad.append(h)
        if h >= 3 and not b.exact_sq_gain < b.legacy_sq_gain:
            bad.append(h)
    record("1 gain chain", not bad, f"violations at {bad}", time.perf_counter() - t0, 1)


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for h in range(1, 41):
        s = np.linalg.svd(lifted_matrix(h), compute_uv=False)[0] ** 2
        worst = max(worst, abs(s - exact_gain(h)) / max(1.0, exact_gain(h)))
    record("2 lifted-operator oracle", worst <= 1e-9, f"max rel. error {worst:.2e}",
           time.perf_counter() - t0, 5)


def test_criterion_3_ratio_limits():
    t0 = time.perf_counter()
    r_exact, r_frob = gain_bundle(500).ratios()
    ok = abs(r_frob - 0.9036) < 1e-3 and abs(r_exact - 0.9003) < 5e-3
    record("3 ratio limits", ok, f"frobenius {r_frob:.5f}, exact {r_exact:.5f}",
           time.perf_counter() - t0, 10)


def _model_msi(**kw):
    return linear_search(lambda h: certify_model(EXAMPLE, h, **kw).certified, cap=400).hbar_msi


def test_criterion_4_model_msi():
    t0 = time.perf_counter()
    exact, legacy = _model_msi(gain_mode="exact"), _model_msi(gain_mode="legacy")
    pinned = _model_msi(gain_mode="exact", pin_y_zero=True)
    ok = abs(exact - 136) <= 1 and abs(legacy - 122) <= 1 and abs(pinned - 136) <= 1
    record("4 model-based MSI", ok, f"exact {exact}, legacy {legacy}, Y=0 {pinned}",
           time.perf_counter() - t0, 300)


def test_criterion_5_data_replica():
    t0 = time.perf_counter()
    got_exact, got_legacy = [], []
    for dbar in DBARS + (0.02,):
        ex = generate_experiment(EXAMPLE, 1000, (-10, 10), dbar, 0.01 * np.eye(2), seed=REPLICA_SEED)
        q = build_qmi(ex.dataset)
        for mode, out in (("exact", got_exact), ("legacy", got_legacy)):
            res = exponential_search(
                lambda h: certify_data(ex.dataset, EXAMPLE.K, h, mode, qmi=q).certified)
            out.append(res.hbar_msi)
    ok = all(g is not None and abs(g - r) <= 3 for g, r in zip(got_exact, EXACT_REF))
    ok &= all(g is not None and abs(g - r) <= 3 for g, r in zip(got_legacy, LEGACY_REF))
    ok &= got_exact[-1] is None and got_legacy[-1] is None
    record("5 data-driven replica", ok,
           f"seed {REPLICA_SEED}: exact {got_exact}, legacy {got_legacy}",
           time.perf_counter() - t0, 1800)


def test_criterion_6_scalar_region():
    t0 = time.perf_counter()
    m = SystemModel.scalar(0.4, 0.5)
    free = {h: certify_model(m, h).certified for h in (10, 100, 1000)}
    pinned = linear_search(lambda h: certify_model(m, h, pin_y_zero=True).certified, cap=1000)
    # past the threshold the pinned test keeps failing
    beyond = [certify_model(m, h, pin_y_zero=True).certified
              for h in (pinned.hbar_msi + 1, 2 * pinned.hbar_msi + 5, 100, 1000)]
    ok = all(free.values()) and pinned.found and not pinned.cap_exhausted and not any(beyond)
    record("6 scalar region (b > 0)", ok,
           f"free Y {free}, Y=0 threshold {pinned.hbar_msi}", time.perf_counter() - t0, 600)


def test_criterion_6_negative_b():
    t0 = time.perf_counter()
    cases = [(0.5, -0.1), (0.4, -0.5), (0.0, -0.3)]
    certified_at_2 = {ab: certify_model(SystemModel.scalar(*ab), 2).certified for ab in cases}
    record("6 scalar region (b < 0 fails at hbar >= 2)", not any(certified_at_2.values()),
           f"certified at hbar=2: {certified_at_2}", time.perf_counter() - t0, 600)


def _iqc_fuzz(rng, count):
    for _ in range(count):
        n = int(rng.integers(1, 5))
        hbar = int(rng.integers(1, 13))
        T = int(rng.integers(1, 65))
        pattern = SamplingPattern.random(hbar, T, rng)
        y = rng.standard_normal((T, n))
        e = apply_delay(y, pattern)
        F = rng.standard_normal((n, n))
        Y = F @ F.T
        X = Y + np.eye(n)
        g = exact_gain(hbar)
        if not (check_passivity(y, pattern, Y).holds and check_iqc(y, e, gain_pi(X, g)).holds
                and check_iqc(y, e, assemble_pi(MultiplierSet(X, Y, g))).holds):
            return False
    return True


def test_criterion_7_property_suites():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    checks = {}
    checks["iqc fuzz 1e4"] = _iqc_fuzz(rng, 10_000)
    boundary = check_passivity([1.0, -1.0], SamplingPattern((2,), 2), [[1.0]])
    checks["passivity boundary"] = boundary.holds and abs(boundary.partial_sums[-1]) < 1e-15
    checks["factor below 1/2"] = not check_passivity([1.0, -1.0], SamplingPattern((2,), 2),
                                                     [[1.0]], factor=0.49).holds
    truth = SystemModel([[0.9, 0.2], [-0.1, 0.8]], [[0.5], [1.0]], [[-0.3, -0.4]])
    ex = generate_experiment(truth, 30, (-1, 1), 0.1, np.eye(2), seed=1)
    q, P = build_qmi(ex.dataset), data_matrix(ex.dataset)
    agree, done = True, 0
    while done < 200:
        W = np.hstack([truth.A, truth.B]) + 10 ** rng.uniform(-3, 1) * rng.standard_normal((2, 3))
        if abs(np.linalg.eigvalsh(qmi_value(W[:, :2], W[:, 2:], P))[0]) < 1e-7 * np.linalg.norm(P, 2):
            continue
        agree &= (membership(W[:, :2], W[:, 2:], ex.dataset, 1e-7)
                  == membership_dual(W[:, :2], W[:, 2:], q, 1e-7))
        done += 1
    checks["duality 200"] = agree
    same = True
    for _ in range(100):
        k, cap = int(rng.integers(1, 501)), int(rng.integers(1, 600))
        a = linear_search(lambda h: h <= k, cap=cap)
        b = exponential_search(lambda h: h <= k, cap=cap)
        same &= (a.hbar_msi, a.cap_exhausted) == (b.hbar_msi, b.cap_exhausted)
    checks["search equivalence 100"] = same
    sound, hits = True, 0
    for k in range(20):
        A = rng.standard_normal((2, 2))
        A *= rng.uniform(0.5, 1.05) / max(abs(np.linalg.eigvals(A)))
        B = rng.standard_normal((2, 1))
        K = -np.linalg.lstsq(B, A - 0.5 * np.eye(2), rcond=None)[0]
        model = SystemModel(A, B, K)
        exk = generate_experiment(model, 40, (-1, 1), 0.02, np.eye(2), seed=k)
        for h in (1, 2, 4):
            if certify_data(exk.dataset, K, h).certified:
                hits += 1
                sound &= certify_model(model, h).certified
    checks[f"soundness 20 scenarios ({hits} certified)"] = sound and hits > 0
    consistent = True
    for model, h in ((EXAMPLE, 136), (SystemModel.scalar(0.4, 0.5), 1000), (truth, 2)):
        if certify_model(model, h).certified:
            consistent &= falsify(model, h, trials=30, horizon=10_000, seed=0).growth < 1 + 1e-6
    checks["falsification consistent"] = consistent
    failed = [k for k, v in checks.items() if not v]
    record("7 property suites", not failed, f"failed: {failed}" if failed else
           f"all {len(checks)} passed", time.perf_counter() - t0, 600)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
