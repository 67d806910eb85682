"""Shared fixtures and the acceptance-criteria result summary."""

import numpy as np
import pytest

from qliflow.model import HamiltonianSpec
from qliflow.qlif import (
    EDEngine,
    GroundStateOf,
    Neel,
    QLIFRequest,
    qlif_heatmap,
    qlif_trace,
)

CHAOTIC12 = HamiltonianSpec(L=12, J=1.0, B=0.8, h_z=0.5)
INTEGRABLE12 = HamiltonianSpec(L=12, J=1.0, B=0.8, h_z=0.0)
# Configuration convention is 1-based: frozen site 4, observed 5..10.
FROZEN12 = 3
OBS12 = tuple(range(4, 10))
TIMES12 = np.linspace(0.0, 6.0, 121)


@pytest.fixture(scope="session")
def l12():
    """L=12 reference dataset shared by several acceptance tests.

    Runs are grouped by evolution Hamiltonian so the two cached
    eigendecompositions (full and frozen) are reused across traces.
    """
    engine = EDEngine()
    times = tuple(TIMES12)
    data = {}
    data["hm_c"] = qlif_heatmap(CHAOTIC12, FROZEN12, OBS12, Neel(), engine, TIMES12)
    data["tr_c"] = qlif_trace(
        QLIFRequest(CHAOTIC12, FROZEN12, 7, Neel(), engine, times))
    data["N"] = qlif_trace(
        QLIFRequest(CHAOTIC12, FROZEN12, 6, Neel(), engine, times))
    data["B"] = qlif_trace(
        QLIFRequest(CHAOTIC12, FROZEN12, 6, GroundStateOf(INTEGRABLE12), engine, times))
    data["hm_i"] = qlif_heatmap(INTEGRABLE12, FROZEN12, OBS12, Neel(), engine, TIMES12)
    data["tr_i"] = qlif_trace(
        QLIFRequest(INTEGRABLE12, FROZEN12, 7, Neel(), engine, times))
    data["A"] = qlif_trace(
        QLIFRequest(INTEGRABLE12, FROZEN12, 6, GroundStateOf(INTEGRABLE12), engine, times))
    return data


_CRITERIA = []


@pytest.fixture
def record_criterion():
    """Collect one measured-value line per acceptance criterion."""
    def _record(num: int, ok: bool, detail: str) -> None:
        _CRITERIA.append((num, ok, detail))
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(_CRITERIA):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {detail}")
