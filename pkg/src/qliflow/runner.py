"""Execute configured experiments and write deterministic artifacts.

Every run produces CSV data files plus a manifest recording the exact
configuration, code version, and any warnings.  Re-running the same
configuration reproduces the numeric outputs byte for byte; wall-clock
time appears only in the manifest.
"""

from __future__ import annotations

import hashlib
import os
import time
import warnings as _warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    InsufficientDataError,
    chaos_metric,
    light_cone_velocity,
)
from .config import ConfigError, ExperimentConfig, serialize_config
from .model import velocity_table
from .otoc import butterfly_velocity, otoc_multidistance, write_otoc_csv
from .qlif import (
    AllUp,
    EDEngine,
    GroundStateOf,
    MPSEngine,
    Neel,
    QLIFRequest,
    SpinPattern,
    qlif_heatmap,
    qlif_trace,
    write_heatmap_csv,
    write_trace_csv,
)

OUTPUT_ROOT_ENV = "QLIFLOW_OUT"
FRONT_THRESHOLD = 1e-3


@dataclass(frozen=True)
class RunManifest:
    """Record of one completed run."""

    hash: str
    version: str
    config_text: str
    run_dir: str
    wall_clock_s: float
    truncation_error: float
    warnings: tuple
    outputs: tuple


def manifest_hash(cfg: ExperimentConfig) -> str:
    """Digest of the configuration and code version.

    Stamped into every CSV header so an artifact can be traced back to
    the exact configuration that produced it.  Wall-clock time and
    warnings are deliberately excluded.
    """
    payload = serialize_config(cfg) + "version = " + __version__
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def measurement_times(cfg: ExperimentConfig) -> np.ndarray:
    """The grid 0, step, ..., t_max; t_max must be a multiple of step."""
    n = cfg.t_max / cfg.step
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise ConfigError(
            f"time.t_max: {cfg.t_max} is not a whole number of steps of {cfg.step}")
    return np.linspace(0.0, cfg.t_max, int(round(n)) + 1)


def _engine(cfg: ExperimentConfig):
    if cfg.engine_name == "mps":
        return MPSEngine(config=cfg.tebd, dmrg_chi=cfg.dmrg_chi,
                         dmrg_seed=cfg.dmrg_seed)
    return EDEngine(cap=cfg.ed_cap)


def _initial_state(cfg: ExperimentConfig):
    if cfg.protocol == "neel":
        return Neel()
    if cfg.protocol == "all-up":
        return AllUp()
    if cfg.protocol == "pattern":
        return SpinPattern(tuple(int(c) for c in cfg.pattern))
    if cfg.protocol == "ground":
        return GroundStateOf(cfg.ground)
    if cfg.protocol in ("A", "C"):
        return GroundStateOf(cfg.model)
    if cfg.protocol == "B":
        return GroundStateOf(cfg.model.integrable_twin())
    raise ConfigError(f"state.protocol: unhandled protocol {cfg.protocol!r}")


def _record(path: Path, fields: dict) -> None:
    """Write an analysis result as key = value lines."""
    lines = []
    for key, value in fields.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n")


def _trace_truncation(trace) -> float:
    meta = trace.metadata
    return meta.get("trunc_err_full", 0.0) + meta.get("trunc_err_frozen", 0.0)


def _trace_warnings(trace) -> list:
    meta = trace.metadata
    return list(meta.get("warnings_full", ())) + list(meta.get("warnings_frozen", ()))


def _run_trace(cfg, times, run_dir, h):
    req = QLIFRequest(
        spec=cfg.model, frozen_site=cfg.frozen_site - 1,
        obs_site=cfg.obs_sites[0] - 1, initial_state=_initial_state(cfg),
        engine=_engine(cfg), times=tuple(times))
    trace = qlif_trace(req)
    out = run_dir / "trace.csv"
    write_trace_csv(trace, out, manifest_hash=h)
    return [out], _trace_truncation(trace), _trace_warnings(trace)


def _run_heatmap(cfg, times, run_dir, h):
    hm = qlif_heatmap(
        cfg.model, cfg.frozen_site - 1, [s - 1 for s in cfg.obs_sites],
        _initial_state(cfg), _engine(cfg), times)
    out = run_dir / "heatmap.csv"
    write_heatmap_csv(hm, out, manifest_hash=h)
    outputs = [out]
    rec = run_dir / "velocity.txt"
    try:
        fit = light_cone_velocity(hm, FRONT_THRESHOLD)
    except InsufficientDataError as exc:
        _record(rec, {"error": str(exc), "threshold": FRONT_THRESHOLD})
        _warnings.warn(f"light-cone fit skipped: {exc}")
    else:
        fields = {"velocity": fit.velocity, "r_squared": fit.r_squared,
                  "threshold": fit.threshold}
        for d, t_star in sorted(fit.arrivals.items()):
            fields[f"arrival.d{d}"] = t_star
        _record(rec, fields)
    outputs.append(rec)
    trunc = hm.metadata.get("trunc_err_full", 0.0) + hm.metadata.get("trunc_err_frozen", 0.0)
    warns = list(hm.metadata.get("warnings_full", ())) + \
        list(hm.metadata.get("warnings_frozen", ()))
    return outputs, trunc, warns


def _run_otoc(cfg, times, run_dir, h):
    trace = otoc_multidistance(
        cfg.model, cfg.w_site - 1, [s - 1 for s in cfg.v_sites], times,
        cap=cfg.ed_cap)
    out = run_dir / "otoc.csv"
    write_otoc_csv(trace, out, manifest_hash=h)
    outputs = [out]
    rec = run_dir / "butterfly.txt"
    try:
        fit = butterfly_velocity(trace, cfg.otoc_threshold)
    except InsufficientDataError as exc:
        _record(rec, {"error": str(exc), "threshold": cfg.otoc_threshold})
        _warnings.warn(f"butterfly fit skipped: {exc}")
    else:
        fields = {"v_b": fit.v_b, "r_squared": fit.r_squared,
                  "threshold": fit.threshold}
        for d, t_star in sorted(fit.arrivals.items()):
            fields[f"arrival.d{d}"] = t_star
        if fit.excluded:
            fields["excluded"] = ",".join(str(d) for d in fit.excluded)
        _record(rec, fields)
    outputs.append(rec)
    return outputs, 0.0, []


def _run_latetime(cfg, times, run_dir, h):
    outputs, trunc, warns = [], 0.0, []
    t_scr = velocity_table(cfg.model).t_scr
    for label, spec in (("chaotic", cfg.model), ("integrable", cfg.model.integrable_twin())):
        req = QLIFRequest(
            spec=spec, frozen_site=cfg.frozen_site - 1,
            obs_site=cfg.obs_sites[0] - 1, initial_state=_initial_state(cfg),
            engine=_engine(cfg), times=tuple(times))
        trace = qlif_trace(req)
        out = run_dir / f"trace-{label}.csv"
        write_trace_csv(trace, out, manifest_hash=h)
        outputs.append(out)
        trunc += _trace_truncation(trace)
        warns += _trace_warnings(trace)
        rec = run_dir / f"verdict-{label}.txt"
        try:
            v = chaos_metric(np.asarray(trace.times), np.asarray(trace.integral), t_scr)
        except InsufficientDataError as exc:
            _record(rec, {"verdict": "insufficient-horizon", "detail": str(exc)})
            _warnings.warn(f"{label}: verdict skipped: {exc}")
        else:
            _record(rec, {
                "verdict": v.verdict, "growth_factor": v.growth_factor,
                "reference_mean": v.reference_mean, "tail_mean": v.tail_mean,
                "t_scr": t_scr})
        outputs.append(rec)
    return outputs, trunc, warns


def _run_suite(cfg, times, run_dir, h):
    """Four initial-state protocols sharing one time grid.

    N: alternating product state into the configured model.
    B: integrable-companion ground state into the configured model.
    C: the model's own ground state (eigenstate evolution).
    A: integrable-companion ground state under the companion itself.
    """
    model = cfg.model
    twin = model.integrable_twin()
    runs = (
        ("N", Neel(), model),
        ("B", GroundStateOf(twin), model),
        ("C", GroundStateOf(model), model),
        ("A", GroundStateOf(twin), twin),
    )
    outputs, trunc, warns = [], 0.0, []
    for label, init, spec in runs:
        req = QLIFRequest(
            spec=spec, frozen_site=cfg.frozen_site - 1,
            obs_site=cfg.obs_sites[0] - 1, initial_state=init,
            engine=_engine(cfg), times=tuple(times))
        trace = qlif_trace(req)
        out = run_dir / f"trace-{label}.csv"
        write_trace_csv(trace, out, manifest_hash=h)
        outputs.append(out)
        trunc += _trace_truncation(trace)
        warns += _trace_warnings(trace)
    return outputs, trunc, warns


_DISPATCH = {
    "qlif-trace": _run_trace,
    "qlif-heatmap": _run_heatmap,
    "otoc": _run_otoc,
    "latetime": _run_latetime,
    "initial-state-suite": _run_suite,
}


def run(cfg: ExperimentConfig, out_root=None) -> RunManifest:
    """Execute one experiment; returns the manifest.

    Output root resolution: explicit argument, then the QLIFLOW_OUT
    environment variable, then the working directory.  Files land in
    ``<root>/<output.dir or kind>/``.
    """
    root = Path(out_root or os.environ.get(OUTPUT_ROOT_ENV, "."))
    run_dir = root / (cfg.out_dir or cfg.kind)
    run_dir.mkdir(parents=True, exist_ok=True)
    times = measurement_times(cfg)
    h = manifest_hash(cfg)

    start = time.perf_counter()
    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always")
        outputs, trunc, warns = _DISPATCH[cfg.kind](cfg, times, run_dir, h)
    wall = time.perf_counter() - start
    # Deduplicate: engine warnings are both raised and carried in metadata.
    seen = list(dict.fromkeys([str(w.message) for w in caught] + warns))

    manifest = RunManifest(
        hash=h, version=__version__, config_text=serialize_config(cfg),
        run_dir=str(run_dir), wall_clock_s=wall, truncation_error=trunc,
        warnings=tuple(seen), outputs=tuple(str(p) for p in outputs))
    _write_manifest(run_dir / "manifest.txt", manifest)
    return manifest


def _write_manifest(path: Path, m: RunManifest) -> None:
    lines = [
        "# run manifest",
        f"hash = {m.hash}",
        f"version = {m.version}",
        f"wall_clock_s = {m.wall_clock_s:.3f}",
        f"truncation_error = {m.truncation_error!r}",
        f"warnings.count = {len(m.warnings)}",
    ]
    for i, w in enumerate(m.warnings, start=1):
        lines.append(f"warnings.{i} = {w}")
    lines.append("outputs = " + ",".join(Path(p).name for p in m.outputs))
    lines.append("# config")
    lines.append(m.config_text.rstrip("\n"))
    path.write_text("\n".join(lines) + "\n")
