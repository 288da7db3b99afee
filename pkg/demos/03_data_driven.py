"""Certifying the same loop from one noisy open-loop experiment.

We pretend the plant is unknown, record 1000 samples under a random input in
[-10, 10] with disturbances bounded by dbar, and certify stability for every
plant consistent with the data.  Small noise recovers the model-based
interval; larger noise shrinks it until nothing can be certified.
"""
import numpy as np

from aperiodic_msi import (AssumptionViolation, SystemModel, build_qmi, certify_data,
                           exponential_search, generate_experiment, membership)

truth = SystemModel([[1.0, 0.01], [0.0, 0.999]], [[5e-6], [1e-3]], [[-3.75, -11.5]])
K = truth.K

print(f"{'dbar':>7} {'exact':>6} {'legacy':>7}  P_AB condition")
for dbar in (0.0005, 0.001, 0.002, 0.005, 0.01, 0.02):
    ex = generate_experiment(truth, 1000, (-10, 10), dbar, 0.01 * np.eye(2), seed=42)
    assert membership(truth.A, truth.B, ex.dataset)
    try:
        qmi = build_qmi(ex.dataset)
    except AssumptionViolation as exc:
        print(f"{dbar:>7} {'-':>6} {'-':>7}  {exc}")
        continue
    msi = [exponential_search(lambda h: certify_data(ex.dataset, K, h, g, qmi=qmi).certified).hbar_msi
           for g in ("exact", "legacy")]
    fmt = ["-" if v is None else str(v) for v in msi]
    print(f"{dbar:>7} {fmt[0]:>6} {fmt[1]:>7}  {qmi.condition:.2e}")
