from __future__ import annotations

import dataclasses
import json
import time
from pathlib import Path

import pytest

from timotherm import LyapunovWeights, MemoryKernel, SimConfig, run

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (passed, detail), filled in by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def feasible_weights() -> LyapunovWeights:
    data = json.loads((FIXTURES / "feasible_weights.json").read_text())
    return LyapunovWeights(**data["weights"])


@pytest.fixture(scope="session")
def default_cfg(feasible_weights) -> SimConfig:
    return SimConfig(weights=feasible_weights)


@pytest.fixture(scope="session")
def default_run(default_cfg):
    start = time.perf_counter()
    traj = run(default_cfg)
    traj.elapsed = time.perf_counter() - start
    return traj


@pytest.fixture(scope="session")
def default_run_half(default_cfg):
    return run(dataclasses.replace(default_cfg, dt=0.5 * default_cfg.dt, stride=2))


@pytest.fixture(scope="session")
def memoryless_cfg(default_cfg) -> SimConfig:
    # g = 0 is outside the kernel hypotheses (g(0) > 0), hence the override
    return dataclasses.replace(default_cfg, kernel=MemoryKernel.exponential(0.0, 1.0),
                               override_hypotheses=True)
