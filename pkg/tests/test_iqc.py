import numpy as np
import pytest

from aperiodic_msi.delay import SamplingPattern, apply_delay, exact_gain, legacy_gain
from aperiodic_msi.iqc import (MultiplierSet, assemble_pi, check_iqc, check_passivity, gain_pi,
                               passivity_pi)


def random_psd(rng, n, rank=None):
    F = rng.standard_normal((n, rank or n))
    return F @ F.T


def test_assemble_pi_examples():
    assert np.allclose(assemble_pi(MultiplierSet([[1.0]], [[0.0]], 1.0)), [[1, 0], [0, -1]])
    g = (3 + np.sqrt(5)) / 2
    assert np.allclose(assemble_pi(MultiplierSet([[1.0]], [[1.0]], g)),
                       [[(5 + np.sqrt(5)) / 2, 1], [1, -1]])
    assert np.allclose(assemble_pi(MultiplierSet(np.eye(2), np.zeros((2, 2)), 1.0)),
                       np.diag([1, 1, -1, -1]))


def test_multiplier_set_validation():
    with pytest.raises(ValueError):
        MultiplierSet([[0.0]], [[0.0]], 1.0)
    with pytest.raises(ValueError):
        MultiplierSet([[1.0]], [[-1.0]], 1.0)
    with pytest.raises(ValueError):
        MultiplierSet(np.eye(2), np.eye(3), 1.0)


def test_check_iqc_examples():
    rng = np.random.default_rng(1)
    y = rng.standard_normal((50, 2))
    pattern = SamplingPattern.random(6, 50, rng)
    pi = assemble_pi(MultiplierSet(np.eye(2), np.eye(2), exact_gain(6)))
    assert check_iqc(y, apply_delay(y, pattern), pi).holds
    big = 2 * legacy_gain(6) * y
    assert not check_iqc(y, big, gain_pi(np.eye(2), 1.0)).holds
    res = check_iqc(np.zeros((5, 1)), np.zeros((5, 1)), gain_pi([[1.0]], 1.0))
    assert res.holds and np.all(res.partial_sums == 0)
    with pytest.raises(ValueError):
        check_iqc(np.zeros((5, 1)), np.zeros((4, 1)), gain_pi([[1.0]], 1.0))


def test_passivity_boundary_case():
    res = check_passivity([1.0, -1.0], SamplingPattern((2,), 2), [[1.0]])
    assert res.holds
    assert np.allclose(res.partial_sums, [0.5, 0.0])


def test_passivity_factor_below_half_fails():
    pattern = SamplingPattern((2,), 2)
    for c in (0.49, 0.4, 0.0):
        assert not check_passivity([1.0, -1.0], pattern, [[1.0]], factor=c).holds


def test_passivity_unit_intervals():
    rng = np.random.default_rng(2)
    y = rng.standard_normal((30, 3))
    Y = random_psd(rng, 3)
    res = check_passivity(y, SamplingPattern((1,) * 30, 1), Y)
    assert res.holds
    assert np.allclose(res.partial_sums, np.cumsum(0.5 * np.einsum("ti,ij,tj->t", y, Y, y)))


def test_passivity_rejects_indefinite():
    with pytest.raises(ValueError):
        check_passivity([1.0], SamplingPattern((1,), 1), [[-1.0]])


def test_iqc_fuzz_ten_thousand():
    """Passivity, gain and combined constraints on 10^4 random admissible cases."""
    rng = np.random.default_rng(2024)
    failures = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 5))
        hbar = int(rng.integers(1, 13))
        T = int(rng.integers(1, 65))
        pattern = SamplingPattern.random(hbar, T, rng)
        y = rng.standard_normal((T, n)) * rng.uniform(0.1, 10)
        e = apply_delay(y, pattern)
        Y = random_psd(rng, n, int(rng.integers(1, n + 1)))
        X = random_psd(rng, n) + 1e-3 * np.eye(n)
        g = exact_gain(hbar)
        checks = (check_passivity(y, pattern, Y).holds,
                  check_iqc(y, e, passivity_pi(Y)).holds,
                  check_iqc(y, e, gain_pi(X, g)).holds,
                  check_iqc(y, e, assemble_pi(MultiplierSet(X, Y, g))).holds)
        failures += not all(checks)
    assert failures == 0


def test_conic_combination():
    rng = np.random.default_rng(5)
    for _ in range(500):
        n = int(rng.integers(1, 4))
        pattern = SamplingPattern.random(8, 40, rng)
        y = rng.standard_normal((40, n))
        e = apply_delay(y, pattern)
        Pp = passivity_pi(random_psd(rng, n))
        Pl = gain_pi(random_psd(rng, n) + np.eye(n), exact_gain(8))
        if check_iqc(y, e, Pp).holds and check_iqc(y, e, Pl).holds:
            a, b = rng.uniform(0, 5, 2)
            assert check_iqc(y, e, a * Pp + b * Pl).holds


def test_long_horizon_extended_precision():
    rng = np.random.default_rng(9)
    T = 20_000
    pattern = SamplingPattern.random(20, T, rng)
    y = rng.standard_normal((T, 2))
    assert check_passivity(y, pattern, np.eye(2)).holds
