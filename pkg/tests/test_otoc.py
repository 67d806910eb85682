"""Operator-spreading traces and front-velocity extraction."""

import numpy as np
import pytest

from qliflow import ed
from qliflow.analysis import InsufficientDataError
from qliflow.model import HamiltonianSpec, build_hamiltonian
from qliflow.otoc import (
    ButterflyFit,
    OTOCTrace,
    butterfly_velocity,
    otoc_multidistance,
    write_otoc_csv,
)

SPEC8 = HamiltonianSpec(L=8, J=1.0, B=0.8, h_z=0.5)


def ramp_trace(t0_of_d, distances=(2, 3, 4, 5), plateau=2.0, ramp=1.0):
    """Rows that rise linearly from 0 at t0(d) to plateau over `ramp`."""
    times = np.arange(0.0, 10.0 + 1e-9, 0.125)
    rows = []
    for d in distances:
        t0 = t0_of_d(d)
        rows.append(np.clip((times - t0) / ramp, 0.0, 1.0) * plateau)
    return OTOCTrace(
        spec=SPEC8,
        w_site=0,
        v_sites=tuple(distances),
        distances=np.array(distances),
        times=times,
        values=np.vstack(rows),
    )


def test_commutes_at_t0_when_disjoint():
    trace = otoc_multidistance(SPEC8, 1, [4], np.array([0.0, 1.0]))
    assert abs(trace.values[0, 0]) < 1e-12


def test_rows_match_single_site_series():
    times = np.array([0.0, 0.7, 1.5])
    trace = otoc_multidistance(SPEC8, 1, [5, 3], times)
    op = build_hamiltonian(SPEC8)
    assert trace.v_sites == (3, 5)
    assert list(trace.distances) == [2, 4]
    for row, v in zip(trace.values, trace.v_sites):
        direct = ed.otoc_series(op, 1, v, times, 8)
        assert np.allclose(row, direct, atol=1e-13)


def test_rows_break_distance_ties_by_site():
    trace = otoc_multidistance(SPEC8, 3, [5, 1], np.array([0.0, 0.5]))
    assert trace.v_sites == (1, 5)
    assert list(trace.distances) == [2, 2]


def test_duplicate_v_sites_rejected():
    with pytest.raises(ValueError):
        otoc_multidistance(SPEC8, 0, [3, 3], np.array([0.0, 1.0]))


def test_front_velocity_exact_on_linear_ramps():
    trace = ramp_trace(lambda d: 0.5 * d + 0.5)
    fit = butterfly_velocity(trace, threshold=0.1)
    assert isinstance(fit, ButterflyFit)
    # Interpolated crossings of 0.1 x plateau land at 0.5*d + 0.6 exactly.
    for d, t_star in fit.arrivals.items():
        assert t_star == pytest.approx(0.5 * d + 0.6, abs=1e-12)
    assert fit.v_b == pytest.approx(2.0, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.excluded == ()


def test_silent_row_is_excluded_with_warning():
    trace = ramp_trace(lambda d: 0.5 * d + 0.5, distances=(2, 3, 4, 5))
    values = np.array(trace.values)
    values[-1] = 0.0  # farthest row never activates
    silent = OTOCTrace(
        spec=trace.spec,
        w_site=trace.w_site,
        v_sites=trace.v_sites,
        distances=trace.distances,
        times=trace.times,
        values=values,
    )
    with pytest.warns(RuntimeWarning, match="never crosses"):
        fit = butterfly_velocity(silent, threshold=0.1)
    assert fit.excluded == (5,)
    assert sorted(fit.arrivals) == [2, 3, 4]
    assert fit.v_b == pytest.approx(2.0, abs=1e-9)


def test_too_few_distances_rejected():
    trace = ramp_trace(lambda d: 0.5 * d, distances=(2, 3))
    with pytest.raises(InsufficientDataError):
        butterfly_velocity(trace, threshold=0.1)


def test_non_monotone_arrivals_rejected():
    trace = ramp_trace(lambda d: 4.0 - 0.5 * d)
    with pytest.raises(InsufficientDataError):
        butterfly_velocity(trace, threshold=0.1)


def test_threshold_must_be_a_fraction():
    trace = ramp_trace(lambda d: 0.5 * d)
    for bad in (0.0, 1.0, -0.2, 3.0):
        with pytest.raises(ValueError):
            butterfly_velocity(trace, bad)


def test_velocity_stable_across_thresholds():
    times = np.arange(0.0, 5.0 + 1e-9, 0.25)
    trace = otoc_multidistance(SPEC8, 1, [3, 4, 5, 6], times)
    fits = {thr: butterfly_velocity(trace, thr) for thr in (0.05, 0.1, 0.2)}
    v_ref = fits[0.1].v_b
    assert 1.0 < v_ref < 2.5
    for fit in fits.values():
        assert fit.r_squared > 0.99
        assert abs(fit.v_b - v_ref) / v_ref < 0.3


def test_otoc_csv_layout(tmp_path):
    times = np.array([0.0, 0.5, 1.0])
    trace = otoc_multidistance(SPEC8, 1, [3, 4, 5], times)
    path = tmp_path / "otoc.csv"
    write_otoc_csv(trace, path, manifest_hash="feedbeef")
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "# manifest=feedbeef"
    header = [line for line in lines if not line.startswith("#")][0]
    assert header == "time,C_d2,C_d3,C_d4"
    data_rows = [line for line in lines if not line.startswith("#")][1:]
    assert len(data_rows) == 3
    first = data_rows[0].split(",")
    assert float(first[0]) == 0.0
    assert all(abs(float(c)) < 1e-12 for c in first[1:])
