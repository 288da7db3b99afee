import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aperiodic_msi import SystemModel  # noqa: E402

# discretised double-integrator-like plant with a stabilising state feedback
A_EX = [[1.0, 0.01], [0.0, 0.999]]
B_EX = [[5e-6], [1e-3]]
K_EX = [[-3.75, -11.5]]


@pytest.fixture
def example_model():
    return SystemModel(A_EX, B_EX, K_EX)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")
