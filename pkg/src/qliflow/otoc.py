"""Multi-distance infinite-temperature OTOC traces and butterfly-velocity
extraction, for side-by-side comparison with the information-flow probe.

Dense-engine only: operator spreading at the accessible sizes (L <= 12) is
enough for the velocity comparison, and Heisenberg-picture tensor-network
evolution is out of scope.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import ed as _ed
from .analysis import InsufficientDataError, _ols, front_arrival
from .model import HamiltonianSpec, build_hamiltonian


@dataclass(frozen=True)
class OTOCTrace:
    """C(t) rows for one W site against several V sites, ordered by distance."""

    spec: HamiltonianSpec
    w_site: int
    v_sites: tuple
    distances: np.ndarray
    times: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("distances", "times", "values"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def otoc_multidistance(spec, w_site, v_sites, times, cap: int = _ed.DEFAULT_ED_CAP) -> OTOCTrace:
    """C(t) = Tr([W(t),V]dag [W(t),V]) / 2^L for each V site.

    W = Z at w_site, V = Z at each v_site, infinite-temperature trace
    average. Rows are ordered by increasing distance |v - w| (ties by site
    index). All rows share one eigendecomposition of H.
    """
    v_sites = list(v_sites)
    if len(set(v_sites)) != len(v_sites):
        raise ValueError("v_sites must be distinct")
    op = build_hamiltonian(spec)
    ordered = sorted(v_sites, key=lambda s: (abs(s - w_site), s))
    times = np.asarray(times, dtype=np.float64)
    rows = [_ed.otoc_series(op, w_site, v, times, cap) for v in ordered]
    return OTOCTrace(
        spec=spec,
        w_site=w_site,
        v_sites=tuple(ordered),
        distances=np.array([abs(v - w_site) for v in ordered]),
        times=times,
        values=np.vstack(rows),
        metadata={"engine": "ed"},
    )


@dataclass(frozen=True)
class ButterflyFit:
    """Front velocity of operator spreading from threshold crossings."""

    v_b: float
    r_squared: float
    arrivals: dict
    threshold: float
    excluded: tuple


def butterfly_velocity(trace: OTOCTrace, threshold: float) -> ButterflyFit:
    """v_B = 1/slope of the fit t*(d) vs d.

    Each row's arrival t*(d) is the first linear-interpolated crossing of
    threshold times that row's saturation value, where saturation is the
    mean of C over the final 20% of the time window (finite-size
    oscillations make the empirical plateau the stable normalizer). Rows
    that never cross are excluded with a warning; fewer than 3 surviving
    rows raises InsufficientDataError.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    if trace.distances.size < 3:
        raise InsufficientDataError("need at least 3 distances for a front fit")
    t0, t1 = float(trace.times[0]), float(trace.times[-1])
    tail = trace.times >= t1 - 0.2 * (t1 - t0)
    arrivals = {}
    excluded = []
    for row in range(trace.distances.size):
        d = int(trace.distances[row])
        saturation = float(trace.values[row, tail].mean())
        t_star = (
            front_arrival(trace.times, trace.values[row], threshold * saturation)
            if saturation > 0
            else None
        )
        if t_star is None:
            excluded.append(d)
            warnings.warn(
                f"distance {d} never crosses {threshold} x saturation; excluded from fit",
                RuntimeWarning,
                stacklevel=2,
            )
        else:
            arrivals[d] = t_star
    if len(arrivals) < 3:
        raise InsufficientDataError(
            f"only {len(arrivals)} distances cross; need >= 3 for a velocity fit"
        )
    ds = np.array(sorted(arrivals))
    ts = np.array([arrivals[d] for d in ds])
    slope, _, r_squared = _ols(ds, ts)
    if slope <= 0:
        raise InsufficientDataError(
            f"arrival times do not increase with distance (slope {slope:.3e})"
        )
    return ButterflyFit(
        v_b=1.0 / slope,
        r_squared=r_squared,
        arrivals=arrivals,
        threshold=threshold,
        excluded=tuple(excluded),
    )


def write_otoc_csv(trace: OTOCTrace, path, manifest_hash=None):
    """CSV: time column, one C column per distance."""
    lines = []
    if manifest_hash is not None:
        lines.append(f"# manifest={manifest_hash}")
    lines.append(f"# L={trace.spec.L}")
    lines.append(f"# J={float(trace.spec.J)!r}")
    lines.append(f"# B={float(trace.spec.B)!r}")
    lines.append(f"# h_z={float(trace.spec.h_z)!r}")
    lines.append(f"# w_site={trace.w_site}")
    lines.append("# v_sites=" + ",".join(str(v) for v in trace.v_sites))
    lines.append("time," + ",".join(f"C_d{int(d)}" for d in trace.distances))
    for k in range(trace.times.size):
        lines.append(
            repr(float(trace.times[k]))
            + ","
            + ",".join(repr(float(v)) for v in trace.values[:, k])
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
