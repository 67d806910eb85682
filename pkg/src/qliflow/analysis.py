"""Growth-law fits, light-cone front extraction, and the time-integral
chaos classification.

All fits are ordinary least squares; power laws are fit in log-log space.
Functions take trace/heatmap objects duck-typed on the attributes they use,
so CSV-loaded results work the same as freshly computed ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import velocity_table

DEFAULT_FLOOR = 1e-14

DEFAULT_FRONT_THRESHOLD = 1e-3


class InsufficientDataError(ValueError):
    """Too few usable points for the requested fit."""


def _ols(x, y):
    """Least-squares line fit: returns (slope, intercept, r_squared)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return float(slope), float(intercept), r_squared


@dataclass(frozen=True)
class FitResult:
    """Power-law fit |T_d| ~ prefactor * t^alpha over a time window."""

    alpha: float
    prefactor: float
    r_squared: float
    window: tuple
    n_points: int
    floor_excluded_count: int


def powerlaw_fit(trace, window=None, floor: float = DEFAULT_FLOOR) -> FitResult:
    """OLS on (ln t, ln |T_d|) inside a window, excluding sub-floor points.

    The default window is [t_LR(d), t_max(d)] from the chain's velocity
    table: after the rigorous bound allows signal, before the wavefront
    arrives. Needs trace attributes times, t_d, and (for the default
    window) spec and d. Fewer than 5 usable points raises
    InsufficientDataError.
    """
    if floor < 1e-15:
        raise ValueError(f"floor must be >= 1e-15, got {floor}")
    if window is None:
        table = velocity_table(trace.spec)
        window = (table.t_lr(trace.d), table.t_max(trace.d))
    t_lo, t_hi = float(window[0]), float(window[1])
    if not t_lo < t_hi:
        raise ValueError(f"empty window ({t_lo}, {t_hi})")
    times = np.asarray(trace.times, dtype=np.float64)
    values = np.abs(np.asarray(trace.t_d, dtype=np.float64))
    in_window = (times >= t_lo) & (times <= t_hi) & (times > 0)
    above = values > floor
    used = in_window & above
    floor_excluded = int(np.count_nonzero(in_window & ~above))
    n_points = int(np.count_nonzero(used))
    if n_points < 5:
        raise InsufficientDataError(
            f"only {n_points} usable points in window ({t_lo}, {t_hi}) above floor {floor}"
        )
    slope, intercept, r_squared = _ols(np.log(times[used]), np.log(values[used]))
    return FitResult(
        alpha=slope,
        prefactor=math.exp(intercept),
        r_squared=r_squared,
        window=(t_lo, t_hi),
        n_points=n_points,
        floor_excluded_count=floor_excluded,
    )


def front_arrival(times, values, threshold: float):
    """First time |values| crosses threshold, linearly interpolated.

    Returns None when the series never crosses. A series starting at or
    above threshold arrives at times[0].
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    times = np.asarray(times, dtype=np.float64)
    values = np.abs(np.asarray(values, dtype=np.float64))
    above = values >= threshold
    if not above.any():
        return None
    k = int(np.argmax(above))
    if k == 0:
        return float(times[0])
    t0, t1 = times[k - 1], times[k]
    v0, v1 = values[k - 1], values[k]
    return float(t0 + (threshold - v0) / (v1 - v0) * (t1 - t0))


@dataclass(frozen=True)
class LightConeFit:
    """Front velocity from arrival times across distances."""

    velocity: float
    r_squared: float
    arrivals: dict
    threshold: float


def light_cone_velocity(heatmap, threshold: float = DEFAULT_FRONT_THRESHOLD) -> LightConeFit:
    """Velocity = 1/slope of the least-squares fit t*(d) vs d.

    Rows that never cross the threshold are skipped; fewer than 3 crossing
    rows raises InsufficientDataError. Needs heatmap attributes distances,
    times, magnitudes.
    """
    arrivals = {}
    for row in range(len(heatmap.distances)):
        t_star = front_arrival(heatmap.times, heatmap.magnitudes[row], threshold)
        if t_star is not None:
            arrivals[int(heatmap.distances[row])] = t_star
    if len(arrivals) < 3:
        raise InsufficientDataError(
            f"only {len(arrivals)} rows cross threshold {threshold}; need >= 3"
        )
    ds = np.array(sorted(arrivals))
    ts = np.array([arrivals[d] for d in ds])
    slope, _, r_squared = _ols(ds, ts)
    if slope <= 0:
        raise InsufficientDataError(
            f"arrival times do not increase with distance (slope {slope:.3e})"
        )
    return LightConeFit(
        velocity=1.0 / slope,
        r_squared=r_squared,
        arrivals=arrivals,
        threshold=threshold,
    )


@dataclass(frozen=True)
class ChaosVerdict:
    """Late-time classification of the running integral I(t)."""

    verdict: str
    growth_factor: float
    reference_mean: float
    tail_mean: float
    reference_window: tuple
    tail_window: tuple


def chaos_metric(
    times,
    integral,
    t_scr: float,
    growth_threshold: float = 2.0,
    signal_floor: float = 1e-12,
) -> ChaosVerdict:
    """Classify I(t) as monotonic-growth, saturating, or indeterminate.

    Compares the mean of I over the tail window [0.8 t_end, t_end]
    against its mean over the reference window [t_scr, 1.2 t_scr], i.e.
    just after the signal has traversed the whole chain.  Window means
    rather than fitted slopes keep the verdict stable against the
    oscillations that decorate saturated series.  Persistent growth must
    at least double the reference level by the tail (magnitude ratio
    above growth_threshold); anything weaker reads as saturation.  When
    both window means sit below signal_floor there is nothing to
    classify.  The series must extend to at least 2 t_scr so the
    windows are disjoint.
    """
    times = np.asarray(times, dtype=np.float64)
    integral = np.asarray(integral, dtype=np.float64)
    if not t_scr > 0:
        raise ValueError(f"t_scr must be > 0, got {t_scr}")
    if not growth_threshold > 1.0:
        raise ValueError(f"growth_threshold must be > 1, got {growth_threshold}")
    t_end = float(times[-1])
    if t_end < 2.0 * t_scr:
        raise InsufficientDataError(
            f"series ends at t={t_end}, need coverage to 2*t_scr={2 * t_scr}"
        )
    reference_window = (t_scr, 1.2 * t_scr)
    tail_window = (0.8 * t_end, t_end)
    means = []
    for lo, hi in (reference_window, tail_window):
        mask = (times >= lo) & (times <= hi)
        if np.count_nonzero(mask) < 2:
            raise InsufficientDataError(f"window ({lo}, {hi}) holds fewer than 2 samples")
        means.append(float(integral[mask].mean()))
    reference_mean, tail_mean = means
    if abs(reference_mean) < signal_floor and abs(tail_mean) < signal_floor:
        verdict = "indeterminate"
        growth_factor = math.nan
    else:
        growth_factor = abs(tail_mean) / max(abs(reference_mean), signal_floor)
        verdict = "monotonic-growth" if growth_factor > growth_threshold else "saturating"
    return ChaosVerdict(
        verdict=verdict,
        growth_factor=growth_factor,
        reference_mean=reference_mean,
        tail_mean=tail_mean,
        reference_window=reference_window,
        tail_window=tail_window,
    )
