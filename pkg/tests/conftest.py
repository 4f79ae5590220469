import numpy as np
import pytest

from planarks.grid import LayerStack
from planarks.scf import Device, ScfConfig

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def well() -> Device:
    """Benchmark quantum well: one layer, eps = m = 1, no doping."""
    return Device.from_stack(LayerStack.single(), 400)


@pytest.fixture
def bench_config() -> ScfConfig:
    return ScfConfig(n_particles=1, q=1, tol_l1=1e-9, max_iter=500)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
