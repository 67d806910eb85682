"""Causal information-flow traces: paired full/frozen evolutions from one
initial state, single-site entropy differences, running integrals, and
multi-distance heatmaps, with CSV serialization.

T_d(t) = S(obs site | full evolution) - S(obs site | frozen evolution),
stored signed, in nats. Values with |T_d| below NOISE_FLOOR are kept but
flagged: double-precision entropy differences at that scale are roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import ed as _ed
from . import mps as _mps
from .model import HamiltonianSpec, build_frozen_hamiltonian, build_hamiltonian

NOISE_FLOOR = 1e-15

GRID_TOL = 1e-9


# ------------------------------------------------------- initial states ----


@dataclass(frozen=True)
class Neel:
    """Alternating up/down product state, up on site 0."""


@dataclass(frozen=True)
class AllUp:
    """All spins up."""


@dataclass(frozen=True)
class SpinPattern:
    """Explicit product state in the Z basis: 0 = up, 1 = down per site."""

    bits: tuple

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")


@dataclass(frozen=True)
class GroundStateOf:
    """Ground state of another chain spec (dense for ED, DMRG for MPS)."""

    spec: HamiltonianSpec


@dataclass(frozen=True)
class DenseVector:
    """Explicit statevector; ED engine only."""

    amplitudes: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "amplitudes", tuple(complex(a) for a in self.amplitudes)
        )


# --------------------------------------------------------------- engines ----


@dataclass(frozen=True)
class EDEngine:
    """Dense eigendecomposition evolution; exact up to the site cap."""

    cap: int = _ed.DEFAULT_ED_CAP


@dataclass(frozen=True)
class MPSEngine:
    """TEBD evolution; ground-state protocols resolved by DMRG."""

    config: _mps.TEBDConfig
    dmrg_chi: int = 64
    dmrg_seed: int = 0


# ------------------------------------------------------------- requests ----


def _validate_sites(L, frozen_site, obs_sites):
    for s in (frozen_site, *obs_sites):
        if not 0 <= s < L:
            raise ValueError(f"site {s} out of range for L={L}")
    for s in obs_sites:
        if s == frozen_site:
            raise ValueError(f"observation site {s} equals the frozen site")


def _validate_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("need an ascending time grid with at least two points")
    if abs(t[0]) > GRID_TOL:
        raise ValueError(f"time grid must start at 0, got {t[0]}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly ascending")
    t = t.copy()
    t[0] = 0.0
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class QLIFRequest:
    """One trace computation: spec, site pair, initial state, engine, grid."""

    spec: HamiltonianSpec
    frozen_site: int
    obs_site: int
    initial_state: object
    engine: object
    times: tuple

    def __post_init__(self):
        _validate_sites(self.spec.L, self.frozen_site, [self.obs_site])
        object.__setattr__(self, "times", _validate_times(self.times))
        if not isinstance(self.engine, (EDEngine, MPSEngine)):
            raise TypeError(f"unknown engine {self.engine!r}")

    @property
    def d(self) -> int:
        return abs(self.obs_site - self.frozen_site)


# --------------------------------------------------------------- results ----


def _trapezoid_cumulative(times, values) -> np.ndarray:
    increments = 0.5 * (values[1:] + values[:-1]) * np.diff(times)
    return np.concatenate([[0.0], np.cumsum(increments)])


@dataclass(frozen=True)
class QLIFTrace:
    """Signed T_d series with both entropy branches and the running integral."""

    spec: HamiltonianSpec
    frozen_site: int
    obs_site: int
    times: np.ndarray
    t_d: np.ndarray
    s_full: np.ndarray
    s_frozen: np.ndarray
    integral: np.ndarray
    below_floor: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("times", "t_d", "s_full", "s_frozen", "integral", "below_floor"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return abs(self.obs_site - self.frozen_site)


@dataclass(frozen=True)
class QLIFHeatmap:
    """|T_d(t)| rows for several observation sites, ordered by increasing d."""

    spec: HamiltonianSpec
    frozen_site: int
    obs_sites: tuple
    distances: np.ndarray
    times: np.ndarray
    magnitudes: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("distances", "times", "magnitudes"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def time_integral(trace: QLIFTrace) -> np.ndarray:
    """Running trapezoid integral of T_d on the recorded grid; I(0) = 0."""
    return _trapezoid_cumulative(trace.times, trace.t_d)


# --------------------------------------------------------------- ED path ----


def _ed_initial_state(state, L, cap) -> _ed.StateVector:
    if isinstance(state, Neel):
        return _ed.neel_state(L)
    if isinstance(state, AllUp):
        return _ed.product_state([0] * L)
    if isinstance(state, SpinPattern):
        if len(state.bits) != L:
            raise ValueError(f"pattern length {len(state.bits)} does not match L={L}")
        return _ed.product_state(state.bits)
    if isinstance(state, GroundStateOf):
        if state.spec.L != L:
            raise ValueError("ground-state spec has a different chain length")
        return _ed.ground_state_dense(build_hamiltonian(state.spec), cap)[1]
    if isinstance(state, DenseVector):
        return _ed.StateVector(L, np.asarray(state.amplitudes))
    raise TypeError(f"unknown initial state {state!r}")


def _ed_entropies(op, psi0, times, obs_sites, cap):
    traj = _ed.evolve(op, psi0, times, cap)
    out = {}
    for site in obs_sites:
        out[site] = np.array(
            [
                _ed.von_neumann_entropy(_ed.reduce_single_site(state, site))
                for state in traj
            ]
        )
    return out


def _ed_branches(spec, frozen_site, obs_sites, initial_state, engine, times):
    full = build_hamiltonian(spec)
    frozen = build_frozen_hamiltonian(spec, frozen_site)
    psi0 = _ed_initial_state(initial_state, spec.L, engine.cap)
    s_full = _ed_entropies(full, psi0, times, obs_sites, engine.cap)
    s_frozen = _ed_entropies(frozen, psi0, times, obs_sites, engine.cap)
    return s_full, s_frozen, {"engine": "ed"}


# -------------------------------------------------------------- MPS path ----


def _mps_initial_state(state, L, engine) -> _mps.MPSState:
    if isinstance(state, Neel):
        return _mps.mps_from_product(_mps.neel_directions(L))
    if isinstance(state, AllUp):
        return _mps.mps_from_product([(0.0, 0.0, 1.0)] * L)
    if isinstance(state, SpinPattern):
        if len(state.bits) != L:
            raise ValueError(f"pattern length {len(state.bits)} does not match L={L}")
        return _mps.mps_from_product(
            [(0.0, 0.0, 1.0 if b == 0 else -1.0) for b in state.bits]
        )
    if isinstance(state, GroundStateOf):
        if state.spec.L != L:
            raise ValueError("ground-state spec has a different chain length")
        result = _mps.dmrg_ground_state(
            build_hamiltonian(state.spec), chi=engine.dmrg_chi, seed=engine.dmrg_seed
        )
        return result.psi
    if isinstance(state, DenseVector):
        raise TypeError("DenseVector initial states require the ED engine")
    raise TypeError(f"unknown initial state {state!r}")


def _mps_grid_config(times, cfg: _mps.TEBDConfig) -> _mps.TEBDConfig:
    steps = np.diff(times)
    if np.max(np.abs(steps - steps[0])) > GRID_TOL:
        raise ValueError("the MPS engine requires a uniform time grid")
    stride = int(round(steps[0] / cfg.dt))
    if stride < 1 or abs(stride * cfg.dt - steps[0]) > GRID_TOL:
        raise ValueError(
            f"grid spacing {steps[0]} is not a whole multiple of dt={cfg.dt}"
        )
    return replace(cfg, measure_stride=stride)


def _mps_branches(spec, frozen_site, obs_sites, initial_state, engine, times):
    cfg = _mps_grid_config(times, engine.config)
    full = build_hamiltonian(spec)
    frozen = build_frozen_hamiltonian(spec, frozen_site)
    psi0 = _mps_initial_state(initial_state, spec.L, engine)
    t_max = float(times[-1])
    meta = {
        "engine": "mps",
        "chi": cfg.chi,
        "dt": cfg.dt,
        "svd_cutoff": cfg.svd_cutoff,
        "measure_stride": cfg.measure_stride,
    }
    entropies = {}
    for branch, op in (("full", full), ("frozen", frozen)):
        psi = psi0.copy()
        records = _mps.tebd_evolve(op, psi, cfg, t_max, obs_sites)
        rec_times = np.array([r.time for r in records])
        if rec_times.size != times.size or np.max(np.abs(rec_times - times)) > GRID_TOL:
            raise RuntimeError("TEBD measurement grid does not match the request grid")
        entropies[branch] = {
            site: np.array([_mps.bloch_entropy(r.bloch[site]) for r in records])
            for site in obs_sites
        }
        meta[f"trunc_err_{branch}"] = psi.trunc_err
        meta[f"warnings_{branch}"] = tuple(w for r in records for w in r.warnings)
    return entropies["full"], entropies["frozen"], meta


# ------------------------------------------------------------ operations ----


def _branches(spec, frozen_site, obs_sites, initial_state, engine, times):
    if isinstance(engine, EDEngine):
        return _ed_branches(spec, frozen_site, obs_sites, initial_state, engine, times)
    if isinstance(engine, MPSEngine):
        return _mps_branches(spec, frozen_site, obs_sites, initial_state, engine, times)
    raise TypeError(f"unknown engine {engine!r}")


def qlif_trace(req: QLIFRequest) -> QLIFTrace:
    """Run the paired evolutions of one request and assemble the trace."""
    s_full, s_frozen, meta = _branches(
        req.spec, req.frozen_site, [req.obs_site], req.initial_state, req.engine, req.times
    )
    sf = s_full[req.obs_site]
    sz = s_frozen[req.obs_site]
    t_d = sf - sz
    return QLIFTrace(
        spec=req.spec,
        frozen_site=req.frozen_site,
        obs_site=req.obs_site,
        times=req.times,
        t_d=t_d,
        s_full=sf,
        s_frozen=sz,
        integral=_trapezoid_cumulative(req.times, t_d),
        below_floor=np.abs(t_d) < NOISE_FLOOR,
        metadata=meta,
    )


def qlif_heatmap(spec, frozen_site, obs_sites, initial_state, engine, times) -> QLIFHeatmap:
    """|T_d(t)| for several observation sites from one trajectory pair.

    The full and frozen evolutions each run once; entropy reads at all
    observation sites come from the same pair. Rows are ordered by
    increasing d (ties by site index).
    """
    obs_sites = list(obs_sites)
    if len(set(obs_sites)) != len(obs_sites):
        raise ValueError("observation sites must be distinct")
    _validate_sites(spec.L, frozen_site, obs_sites)
    times = _validate_times(times)
    ordered = sorted(obs_sites, key=lambda s: (abs(s - frozen_site), s))
    s_full, s_frozen, meta = _branches(
        spec, frozen_site, ordered, initial_state, engine, times
    )
    magnitudes = np.vstack([np.abs(s_full[s] - s_frozen[s]) for s in ordered])
    return QLIFHeatmap(
        spec=spec,
        frozen_site=frozen_site,
        obs_sites=tuple(ordered),
        distances=np.array([abs(s - frozen_site) for s in ordered]),
        times=times,
        magnitudes=magnitudes,
        metadata=meta,
    )


# -------------------------------------------------------------- CSV forms ----


def _fmt(x) -> str:
    return repr(float(x))


def _spec_comments(spec: HamiltonianSpec) -> list:
    return [
        f"# L={spec.L}",
        f"# J={_fmt(spec.J)}",
        f"# B={_fmt(spec.B)}",
        f"# h_z={_fmt(spec.h_z)}",
    ]


def _meta_comments(metadata: dict) -> list:
    lines = []
    for key in ("engine", "chi", "dt", "svd_cutoff", "measure_stride"):
        if key in metadata:
            lines.append(f"# {key}={metadata[key]}")
    for key in ("trunc_err_full", "trunc_err_frozen"):
        if key in metadata:
            lines.append(f"# {key}={_fmt(metadata[key])}")
    return lines


def write_trace_csv(trace: QLIFTrace, path, manifest_hash=None):
    lines = []
    if manifest_hash is not None:
        lines.append(f"# manifest={manifest_hash}")
    lines += _spec_comments(trace.spec)
    lines.append(f"# frozen_site={trace.frozen_site}")
    lines.append(f"# obs_site={trace.obs_site}")
    lines += _meta_comments(trace.metadata)
    lines.append("time,T_d,S_full,S_frozen,integral,below_floor")
    for k in range(trace.times.size):
        lines.append(
            ",".join(
                [
                    _fmt(trace.times[k]),
                    _fmt(trace.t_d[k]),
                    _fmt(trace.s_full[k]),
                    _fmt(trace.s_frozen[k]),
                    _fmt(trace.integral[k]),
                    "1" if trace.below_floor[k] else "0",
                ]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_comments(lines):
    meta = {}
    for line in lines:
        body = line[1:].strip()
        if "=" in body:
            key, value = body.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def _spec_from_comments(meta) -> HamiltonianSpec:
    return HamiltonianSpec(
        L=int(meta["L"]),
        J=float(meta["J"]),
        B=float(meta["B"]),
        h_z=float(meta["h_z"]),
    )


def read_trace_csv(path) -> QLIFTrace:
    with open(path) as fh:
        raw = [line.rstrip("\n") for line in fh if line.strip()]
    comments = [line for line in raw if line.startswith("#")]
    body = [line for line in raw if not line.startswith("#")]
    meta = _parse_comments(comments)
    header, rows = body[0], body[1:]
    if header.split(",") != ["time", "T_d", "S_full", "S_frozen", "integral", "below_floor"]:
        raise ValueError(f"unrecognized trace header: {header}")
    data = np.array([[float(cell) for cell in row.split(",")] for row in rows])
    extra = {}
    if "engine" in meta:
        extra["engine"] = meta["engine"]
    for key in ("chi", "measure_stride"):
        if key in meta:
            extra[key] = int(meta[key])
    for key in ("dt", "svd_cutoff", "trunc_err_full", "trunc_err_frozen"):
        if key in meta:
            extra[key] = float(meta[key])
    if "manifest" in meta:
        extra["manifest"] = meta["manifest"]
    return QLIFTrace(
        spec=_spec_from_comments(meta),
        frozen_site=int(meta["frozen_site"]),
        obs_site=int(meta["obs_site"]),
        times=data[:, 0],
        t_d=data[:, 1],
        s_full=data[:, 2],
        s_frozen=data[:, 3],
        integral=data[:, 4],
        below_floor=data[:, 5] != 0,
        metadata=extra,
    )


def write_heatmap_csv(heatmap: QLIFHeatmap, path, manifest_hash=None):
    lines = []
    if manifest_hash is not None:
        lines.append(f"# manifest={manifest_hash}")
    lines += _spec_comments(heatmap.spec)
    lines.append(f"# frozen_site={heatmap.frozen_site}")
    lines.append("# obs_sites=" + ",".join(str(s) for s in heatmap.obs_sites))
    lines += _meta_comments(heatmap.metadata)
    lines.append("d," + ",".join(_fmt(t) for t in heatmap.times))
    for row in range(heatmap.distances.size):
        lines.append(
            str(int(heatmap.distances[row]))
            + ","
            + ",".join(_fmt(v) for v in heatmap.magnitudes[row])
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_heatmap_csv(path) -> QLIFHeatmap:
    with open(path) as fh:
        raw = [line.rstrip("\n") for line in fh if line.strip()]
    comments = [line for line in raw if line.startswith("#")]
    body = [line for line in raw if not line.startswith("#")]
    meta = _parse_comments(comments)
    header, rows = body[0], body[1:]
    cells = header.split(",")
    if cells[0] != "d":
        raise ValueError(f"unrecognized heatmap header: {header}")
    times = np.array([float(c) for c in cells[1:]])
    distances = []
    magnitudes = []
    for row in rows:
        parts = row.split(",")
        distances.append(int(parts[0]))
        magnitudes.append([float(c) for c in parts[1:]])
    obs_sites = tuple(int(s) for s in meta["obs_sites"].split(","))
    extra = {"manifest": meta["manifest"]} if "manifest" in meta else {}
    if "engine" in meta:
        extra["engine"] = meta["engine"]
    return QLIFHeatmap(
        spec=_spec_from_comments(meta),
        frozen_site=int(meta["frozen_site"]),
        obs_sites=obs_sites,
        distances=np.array(distances),
        times=times,
        magnitudes=np.array(magnitudes),
        metadata=extra,
    )
