import numpy as np
import pytest

from aperiodic_msi.data import (AssumptionViolation, DataSet, DisturbanceModel, build_qmi,
                                certify_data, data_matrix, inverse_form_lmi, lft_transform,
                                membership, membership_dual, norm_bound_disturbance,
                                qmi_value, data_lmi_problem)
from aperiodic_msi.delay import gain_value
from aperiodic_msi.model import SystemModel, certify_model
from aperiodic_msi.msi import exponential_search
from aperiodic_msi.simulate import generate_experiment

TRUTH = SystemModel([[0.9, 0.2], [-0.1, 0.8]], [[0.5], [1.0]], [[-0.3, -0.4]])


@pytest.fixture(scope="module")
def small_experiment():
    # short, noisy experiment: the data matrix is well conditioned
    return generate_experiment(TRUTH, 30, (-1, 1), 0.1, np.eye(2), seed=1)


def test_norm_bound_disturbance_examples():
    d = norm_bound_disturbance(1000, 2, 0.01, 0.01 * np.eye(2))
    assert np.allclose(d.Rd, 0.1 * np.eye(2))
    assert np.array_equal(d.Qd, -np.eye(1000))
    assert not np.any(d.Sd)
    assert not np.any(norm_bound_disturbance(5, 2, 0.0, np.eye(2)).Rd)
    assert np.allclose(norm_bound_disturbance(1, 1, 1.0, [[1.0]]).Rd, [[1.0]])
    with pytest.raises(ValueError):
        norm_bound_disturbance(0, 1, 1.0, [[1.0]])
    with pytest.raises(ValueError):
        norm_bound_disturbance(5, 2, 1.0, np.ones((2, 2)))


def test_disturbance_model_requires_negative_definite_qd():
    with pytest.raises(ValueError):
        DisturbanceModel(np.eye(3), np.zeros((3, 1)), [[1.0]], [[1.0]])


def test_dataset_shapes_and_empty_rejected():
    x = np.arange(8.0).reshape(4, 2)
    u = np.arange(3.0)
    ds = DataSet.from_trajectory(x, u, norm_bound_disturbance(3, 2, 0.1, np.eye(2)))
    assert ds.N == 3 and ds.n == 2 and ds.m == 1
    assert np.array_equal(ds.Xplus[:, 0], x[1])
    assert np.array_equal(ds.X[:, 0], x[0])
    with pytest.raises(ValueError):
        DataSet(np.zeros((2, 0)), np.zeros((2, 0)), np.zeros((1, 0)),
                norm_bound_disturbance(1, 2, 0.1, np.eye(2)))
    with pytest.raises(ValueError):
        DataSet.from_trajectory(x, u[:2], norm_bound_disturbance(2, 2, 0.1, np.eye(2)))


def test_data_matrix_formula(small_experiment):
    ds = small_experiment.dataset
    dm = ds.disturbance
    Z = np.zeros((3, 2))
    left = np.block([[-ds.X, Z[:2, :]], [-ds.U, Z[:1, :]], [ds.Xplus, dm.Bd]])
    mid = np.block([[dm.Qd, dm.Sd], [dm.Sd.T, dm.Rd]])
    assert np.allclose(data_matrix(ds), left @ mid @ left.T)


def test_truth_is_member(small_experiment):
    assert membership(TRUTH.A, TRUTH.B, small_experiment.dataset)
    assert not membership(TRUTH.A + 1e3 * np.eye(2), TRUTH.B, small_experiment.dataset)


def test_noise_free_equality_case():
    ex = generate_experiment(TRUTH, 20, seed=3)
    ds = ex.dataset
    assert membership(TRUTH.A, TRUTH.B, ds)
    assert np.allclose(qmi_value(TRUTH.A, TRUTH.B, data_matrix(ds)), 0, atol=1e-9)


def test_qmi_inverse_blocks(small_experiment):
    q = build_qmi(small_experiment.dataset)
    assert q.inertia == (3, 0, 2)
    res = np.linalg.norm(q.Pinv @ q.P - np.eye(5)) / np.linalg.norm(np.eye(5))
    assert res < 1e-8


def test_build_qmi_too_few_samples():
    ex = generate_experiment(TRUTH, 2, (-1, 1), 0.1, np.eye(2), seed=0)
    with pytest.raises(AssumptionViolation):
        build_qmi(ex.dataset)
    cert = certify_data(ex.dataset, TRUTH.K, 2)
    assert cert.verdict == "assumption-violated"


def test_data_lmi_requires_validation(small_experiment):
    q = build_qmi(small_experiment.dataset, validate=False)
    with pytest.raises(AssumptionViolation):
        data_lmi_problem(TRUTH.K, q, 2)


def test_duality_membership_agreement(small_experiment):
    rng = np.random.default_rng(11)
    ds = small_experiment.dataset
    q = build_qmi(ds)
    W0 = np.hstack([TRUTH.A, TRUTH.B])
    P = data_matrix(ds)
    checked = 0
    while checked < 200:
        W = W0 + 10 ** rng.uniform(-3, 1) * rng.standard_normal((2, 3))
        A, B = W[:, :2], W[:, 2:]
        # skip samples too close to the boundary to have a well-defined verdict
        if abs(np.linalg.eigvalsh(qmi_value(A, B, P))[0]) < 1e-7 * np.linalg.norm(P, 2):
            continue
        assert membership(A, B, ds, rtol=1e-7) == membership_dual(A, B, q, rtol=1e-7)
        checked += 1


@pytest.mark.parametrize("hbar", [1, 3, 8])
def test_congruence_between_lmi_forms(small_experiment, hbar):
    q = build_qmi(small_experiment.dataset)
    rng = np.random.default_rng(hbar)
    T = lft_transform(TRUTH.K, q)
    problem = data_lmi_problem(TRUTH.K, q, hbar)
    for _ in range(3):
        vals = {}
        for name in ("S", "X", "Y"):
            F = rng.standard_normal((2, 2))
            vals[name] = F @ F.T
        vals["lam"] = np.array([[1.0]])
        ours = problem.constraints[0].expr.evaluate(vals)
        ref = T.T @ inverse_form_lmi(TRUTH.K, q, gain_value(hbar), vals["S"], vals["X"],
                                     vals["Y"]) @ T
        assert np.allclose(ours, ref, atol=1e-10 * max(1.0, np.abs(ref).max()))


def test_certified_data_implies_certified_truth():
    rng = np.random.default_rng(21)
    for k in range(20):
        A = rng.standard_normal((2, 2))
        A *= rng.uniform(0.5, 1.05) / max(abs(np.linalg.eigvals(A)))
        B = rng.standard_normal((2, 1))
        K = -np.linalg.lstsq(B, A - 0.5 * np.eye(2), rcond=None)[0]
        truth = SystemModel(A, B, K)
        ex = generate_experiment(truth, 40, (-1, 1), 0.02, np.eye(2), seed=k)
        for h in (1, 2, 4):
            if certify_data(ex.dataset, K, h).certified:
                assert certify_model(truth, h).certified


def test_msi_monotone_in_noise_bound():
    ex = generate_experiment(TRUTH, 60, (-1, 1), 0.01, np.eye(2), seed=5)
    msis = []
    for dbar in (0.01, 0.03, 0.1):
        dist = norm_bound_disturbance(60, 2, dbar, np.eye(2))
        ds = DataSet(ex.dataset.Xplus, ex.dataset.X, ex.dataset.U, dist)
        res = exponential_search(lambda h: certify_data(ds, TRUTH.K, h).certified, cap=200)
        msis.append(res.hbar_msi or 0)
    assert msis == sorted(msis, reverse=True)


def test_low_noise_data_matches_model(small_experiment):
    ex = generate_experiment(TRUTH, 200, (-1, 1), 1e-4, np.eye(2), seed=2)
    for h in (1, 3, 6):
        assert certify_data(ex.dataset, TRUTH.K, h).certified == certify_model(TRUTH, h).certified
