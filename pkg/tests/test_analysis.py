"""Power-law fits, front extraction, and the growth-vs-saturation verdict."""

import math

import numpy as np
import pytest

from qliflow.analysis import (
    InsufficientDataError,
    chaos_metric,
    front_arrival,
    light_cone_velocity,
    powerlaw_fit,
)
from qliflow.model import HamiltonianSpec, velocity_table
from qliflow.qlif import QLIFHeatmap, QLIFTrace

SPEC8 = HamiltonianSpec(L=8, J=1.0, B=0.8, h_z=0.5)


def synthetic_trace(times, t_d, spec=SPEC8, frozen_site=1, obs_site=5):
    times = np.asarray(times, dtype=np.float64)
    t_d = np.asarray(t_d, dtype=np.float64)
    zeros = np.zeros_like(times)
    return QLIFTrace(
        spec=spec, frozen_site=frozen_site, obs_site=obs_site, times=times,
        t_d=t_d, s_full=zeros, s_frozen=zeros, integral=zeros,
        below_floor=np.zeros_like(times, dtype=bool))


def test_powerlaw_exact_on_synthetic():
    t = np.linspace(0.1, 2.0, 50)
    fit = powerlaw_fit(synthetic_trace(t, 3.0 * t**5), window=(0.05, 2.5))
    assert fit.alpha == pytest.approx(5.0, abs=1e-9)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 50


def test_powerlaw_scale_covariance():
    t = np.linspace(0.2, 3.0, 40)
    base = powerlaw_fit(synthetic_trace(t, 2.0 * t**7), window=(0.1, 3.5))
    scaled = powerlaw_fit(synthetic_trace(t, 10.0 * 2.0 * t**7), window=(0.1, 3.5))
    assert scaled.alpha == pytest.approx(base.alpha, abs=1e-12)
    assert scaled.r_squared == pytest.approx(base.r_squared, abs=1e-12)
    assert scaled.prefactor == pytest.approx(10.0 * base.prefactor, rel=1e-9)


def test_powerlaw_default_window_from_distance():
    # frozen 1, obs 5: d=4, so the window is [4/v_lr, 4/v_max].
    table = velocity_table(SPEC8)
    t = np.linspace(0.05, 3.0, 60)
    fit = powerlaw_fit(synthetic_trace(t, t**4))
    assert fit.window[0] == pytest.approx(table.t_lr(4), abs=1e-12)
    assert fit.window[1] == pytest.approx(table.t_max(4), abs=1e-12)


def test_powerlaw_window_containment_and_floor():
    t = np.linspace(0.1, 2.0, 30)
    values = 1e-20 * np.ones_like(t)
    values[10:20] = t[10:20] ** 3
    fit = powerlaw_fit(synthetic_trace(t, values), window=(t[8], t[22]), floor=1e-14)
    # Points below the floor inside the window are counted, not fitted.
    assert fit.n_points == 10
    assert fit.floor_excluded_count == 5
    assert fit.alpha == pytest.approx(3.0, abs=1e-9)


def test_powerlaw_too_few_points():
    t = np.linspace(0.1, 1.0, 10)
    with pytest.raises(InsufficientDataError):
        powerlaw_fit(synthetic_trace(t, t**2), window=(0.85, 1.0))


def test_powerlaw_rejects_tiny_floor():
    t = np.linspace(0.1, 1.0, 10)
    with pytest.raises(ValueError):
        powerlaw_fit(synthetic_trace(t, t**2), floor=1e-16)


def test_front_arrival_never_crosses():
    t = np.linspace(0, 5, 100)
    assert front_arrival(t, np.full_like(t, 1e-9), 1e-3) is None


def test_front_arrival_step():
    t = np.linspace(0, 5, 5001)
    values = np.where(t >= 3.0, 1.0, 0.0)
    t_star = front_arrival(t, values, 0.5)
    assert abs(t_star - 3.0) <= t[1] - t[0]


def test_front_arrival_interpolates():
    t = np.array([0.0, 1.0, 2.0])
    values = np.array([0.0, 0.0, 1.0])
    assert front_arrival(t, values, 0.25) == pytest.approx(1.25, abs=1e-12)


def synthetic_heatmap(arrival_slope, dt=0.125, distances=(1, 2, 3, 4)):
    """Rows ramp so the interpolated crossing of 1e-3 is exactly d*slope."""
    threshold = 1e-3
    times = np.arange(0.0, 4.0 + dt / 2, dt)
    rows = []
    for d in distances:
        t0 = d * arrival_slope - dt
        rows.append(np.maximum(0.0, (times - t0) * (threshold / dt)))
    return QLIFHeatmap(
        spec=SPEC8, frozen_site=0, obs_sites=tuple(distances),
        distances=np.array(distances, dtype=float), times=times,
        magnitudes=np.array(rows))


def test_light_cone_velocity_exact_synthetic():
    fit = light_cone_velocity(synthetic_heatmap(1 / 1.6), threshold=1e-3)
    assert fit.velocity == pytest.approx(1.6, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.arrivals[2] == pytest.approx(2 / 1.6, abs=1e-12)


def test_light_cone_velocity_needs_three_crossings():
    hm = synthetic_heatmap(10.0)  # arrivals beyond the grid for d >= 1
    with pytest.raises(InsufficientDataError):
        light_cone_velocity(hm, threshold=1e-3)


def test_light_cone_velocity_rejects_decreasing_arrivals():
    hm = synthetic_heatmap(-0.5, distances=(1, 2, 3))
    with pytest.raises(InsufficientDataError):
        light_cone_velocity(hm, threshold=1e-3)


def test_chaos_metric_linear_growth():
    t = np.linspace(0, 10, 500)
    verdict = chaos_metric(t, t, t_scr=1.0)
    assert verdict.verdict == "monotonic-growth"
    assert verdict.growth_factor > 2.0


def test_chaos_metric_exponential_saturation():
    t = np.linspace(0, 10, 500)
    verdict = chaos_metric(t, 1.0 - np.exp(-t), t_scr=1.0)
    assert verdict.verdict == "saturating"


def test_chaos_metric_no_signal():
    t = np.linspace(0, 10, 100)
    verdict = chaos_metric(t, np.zeros_like(t), t_scr=1.0)
    assert verdict.verdict == "indeterminate"
    assert math.isnan(verdict.growth_factor)


def test_chaos_metric_negative_growth_counts_as_growth():
    # A persistently negative integral still grows in magnitude.
    t = np.linspace(0, 10, 500)
    verdict = chaos_metric(t, -t, t_scr=1.0)
    assert verdict.verdict == "monotonic-growth"


def test_chaos_metric_determinism():
    t = np.linspace(0, 12, 300)
    series = np.log1p(t) * 0.3
    first = chaos_metric(t, series, t_scr=2.0)
    second = chaos_metric(t, series, t_scr=2.0)
    assert first == second


def test_chaos_metric_requires_horizon():
    t = np.linspace(0, 3, 50)
    with pytest.raises(InsufficientDataError):
        chaos_metric(t, t, t_scr=2.0)


def test_chaos_metric_validates_inputs():
    t = np.linspace(0, 10, 50)
    with pytest.raises(ValueError):
        chaos_metric(t, t, t_scr=-1.0)
    with pytest.raises(ValueError):
        chaos_metric(t, t, t_scr=1.0, growth_threshold=0.9)
