"""Experiment configuration: flat key=value files with dotted sections.

A configuration fully determines a run: model couplings, engine choice,
initial-state protocol, sites, and time grid.  Site indices in
configuration files are 1-based; they are converted to 0-based indices
at the point where requests are built.  Serialization round-trips
losslessly so that a run can be reproduced from its manifest echo.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .model import HamiltonianSpec
from .mps import TEBDConfig

KINDS = ("qlif-trace", "qlif-heatmap", "otoc", "latetime", "initial-state-suite")
PROTOCOLS = ("neel", "all-up", "pattern", "ground", "A", "B", "C")
ENGINES = ("ed", "mps")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully specified experiment.

    Parameters
    ----------
    kind : str
        One of ``KINDS``.
    model : HamiltonianSpec
        Couplings of the evolution Hamiltonian.
    engine_name : str
        ``"ed"`` or ``"mps"``.
    tebd : TEBDConfig or None
        Trotter settings; required when ``engine_name == "mps"``.
    protocol : str
        Initial-state protocol.  ``"A"``/``"B"`` start from the ground
        state of the integrable companion model (``h_z = 0``), ``"C"``
        from the ground state of ``model`` itself; ``"ground"`` uses the
        explicit ``ground`` spec below.
    frozen_site, obs_sites, w_site, v_sites : 1-based site indices
        Which of these are required depends on ``kind``.
    t_max, step : float
        Measurement grid ``0, step, 2*step, ..., t_max``.
    """

    kind: str
    model: HamiltonianSpec
    engine_name: str = "ed"
    tebd: TEBDConfig | None = None
    ed_cap: int = 12
    dmrg_chi: int = 64
    dmrg_seed: int = 0
    protocol: str = "neel"
    pattern: str | None = None
    ground: HamiltonianSpec | None = None
    frozen_site: int | None = None
    obs_sites: tuple[int, ...] | None = None
    w_site: int | None = None
    v_sites: tuple[int, ...] | None = None
    t_max: float = 5.0
    step: float = 0.05
    otoc_threshold: float = 0.1
    out_dir: str | None = None
    note: str | None = None

    def __post_init__(self) -> None:
        validate_config(self)


def _site_ok(site: int, L: int) -> bool:
    return 1 <= site <= L


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def validate_config(cfg: ExperimentConfig) -> None:
    """Check cross-field consistency, naming the offending key on failure."""
    L = cfg.model.L
    _require(cfg.kind in KINDS, "kind", f"expected one of {KINDS}, got {cfg.kind!r}")
    _require(cfg.engine_name in ENGINES, "engine.name",
             f"expected one of {ENGINES}, got {cfg.engine_name!r}")
    _require(cfg.protocol in PROTOCOLS, "state.protocol",
             f"expected one of {PROTOCOLS}, got {cfg.protocol!r}")
    if cfg.engine_name == "mps":
        _require(cfg.tebd is not None, "engine.dt", "required for the mps engine")
    _require(cfg.t_max > 0, "time.t_max", f"must be positive, got {cfg.t_max}")
    _require(0 < cfg.step <= cfg.t_max, "time.step",
             f"must be in (0, t_max], got {cfg.step}")
    _require(0 < cfg.otoc_threshold < 1, "fit.otoc_threshold",
             f"must be in (0, 1), got {cfg.otoc_threshold}")

    if cfg.protocol == "pattern":
        _require(cfg.pattern is not None, "state.pattern", "required for protocol=pattern")
        _require(len(cfg.pattern) == L, "state.pattern",
                 f"length {len(cfg.pattern)} does not match model.L={L}")
        _require(set(cfg.pattern) <= {"0", "1"}, "state.pattern",
                 "may contain only '0' (up) and '1' (down)")
    if cfg.protocol == "ground":
        _require(cfg.ground is not None, "state.ground.J", "required for protocol=ground")
        _require(cfg.ground.L == L, "state.ground.L",
                 f"must equal model.L={L}, got {cfg.ground.L}")
    if cfg.protocol == "A":
        _require(cfg.model.is_integrable(), "state.protocol",
                 "protocol A evolves under the integrable model; set model.h_z = 0")
    if cfg.protocol == "B":
        _require(not cfg.model.is_integrable(), "state.protocol",
                 "protocol B quenches into a chaotic model; model.h_z must be nonzero")

    if cfg.kind in ("qlif-trace", "qlif-heatmap", "latetime", "initial-state-suite"):
        _require(cfg.frozen_site is not None, "sites.frozen", f"required for kind={cfg.kind}")
        _require(_site_ok(cfg.frozen_site, L), "sites.frozen",
                 f"must be in 1..{L}, got {cfg.frozen_site}")
        _require(cfg.obs_sites is not None and len(cfg.obs_sites) > 0,
                 "sites.obs", f"required for kind={cfg.kind}")
        for s in cfg.obs_sites:
            _require(_site_ok(s, L), "sites.obs", f"must be in 1..{L}, got {s}")
            _require(s != cfg.frozen_site, "sites.obs",
                     f"must differ from sites.frozen={cfg.frozen_site}")
        _require(len(set(cfg.obs_sites)) == len(cfg.obs_sites), "sites.obs",
                 "sites must be distinct")
        if cfg.kind != "qlif-heatmap":
            _require(len(cfg.obs_sites) == 1, "sites.obs",
                     f"kind={cfg.kind} takes a single observed site")
    if cfg.kind in ("latetime", "initial-state-suite"):
        _require(not cfg.model.is_integrable(), "model.h_z",
                 f"kind={cfg.kind} compares against the integrable companion; "
                 "model.h_z must be nonzero")
        _require(cfg.protocol == "neel", "state.protocol",
                 f"kind={cfg.kind} fixes its own initial states")
    if cfg.kind == "otoc":
        _require(cfg.engine_name == "ed", "engine.name", "otoc runs use the ed engine")
        _require(cfg.w_site is not None, "sites.w", "required for kind=otoc")
        _require(_site_ok(cfg.w_site, L), "sites.w", f"must be in 1..{L}, got {cfg.w_site}")
        _require(cfg.v_sites is not None and len(cfg.v_sites) > 0,
                 "sites.v", "required for kind=otoc")
        for s in cfg.v_sites:
            _require(_site_ok(s, L), "sites.v", f"must be in 1..{L}, got {s}")
            _require(s != cfg.w_site, "sites.v", f"must differ from sites.w={cfg.w_site}")
        _require(len(set(cfg.v_sites)) == len(cfg.v_sites), "sites.v",
                 "sites must be distinct")


# --- parsing ---------------------------------------------------------------

def _parse_sites(raw: str, path: str) -> tuple[int, ...]:
    """Parse ``"5"``, ``"5,7,9"``, or the inclusive range ``"5..10"``."""
    raw = raw.strip()
    try:
        if ".." in raw:
            lo, hi = raw.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return tuple(int(tok) for tok in raw.split(","))
    except ValueError:
        raise ConfigError(f"{path}: expected a site, list, or range, got {raw!r}") from None


def _typed(raw: str, to_type, path: str):
    try:
        return to_type(raw)
    except ValueError:
        raise ConfigError(
            f"{path}: expected {to_type.__name__}, got {raw!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse a flat key=value configuration.

    Lines are ``key = value``; blank lines and ``#`` comments are
    ignored.  Unknown keys are an error, as is a duplicate key.
    """
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in pairs:
            raise ConfigError(f"{key}: duplicate key")
        pairs[key] = value.strip()

    def pop(key, to_type=str, default=None):
        if key not in pairs:
            return default
        return _typed(pairs.pop(key), to_type, key)

    kind = pop("kind")
    _require(kind is not None, "kind", "missing required key")
    note = pop("note")
    out_dir = pop("output.dir")

    model_L = pop("model.L", int)
    _require(model_L is not None, "model.L", "missing required key")
    try:
        model = HamiltonianSpec(
            L=model_L,
            J=pop("model.J", float, 1.0),
            B=pop("model.B", float, 0.8),
            h_z=pop("model.h_z", float, 0.5),
        )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None

    engine_name = pop("engine.name", str, "ed")
    tebd = None
    mps_keys = ("engine.dt", "engine.chi", "engine.svd_cutoff", "engine.trunc_alarm")
    if engine_name == "mps":
        dt = pop("engine.dt", float)
        _require(dt is not None, "engine.dt", "required for the mps engine")
        try:
            tebd = TEBDConfig(
                dt=dt,
                chi=pop("engine.chi", int, 64),
                svd_cutoff=pop("engine.svd_cutoff", float, 1e-12),
                trunc_alarm=pop("engine.trunc_alarm", float, 1e-6),
            )
        except ValueError as exc:
            raise ConfigError(f"engine: {exc}") from None
    else:
        present = [k for k in mps_keys if k in pairs]
        _require(not present, present[0] if present else "engine",
                 "only valid for the mps engine")

    protocol = pop("state.protocol", str, "neel")
    if protocol == "N":
        protocol = "neel"
    pattern = pop("state.pattern")
    ground = None
    if any(k.startswith("state.ground.") for k in pairs):
        try:
            ground = HamiltonianSpec(
                L=pop("state.ground.L", int, model.L),
                J=pop("state.ground.J", float, model.J),
                B=pop("state.ground.B", float, model.B),
                h_z=pop("state.ground.h_z", float, 0.0),
            )
        except ValueError as exc:
            raise ConfigError(f"state.ground: {exc}") from None

    frozen_site = pop("sites.frozen", int)
    obs_raw = pairs.pop("sites.obs", None)
    obs_sites = _parse_sites(obs_raw, "sites.obs") if obs_raw is not None else None
    w_site = pop("sites.w", int)
    v_raw = pairs.pop("sites.v", None)
    v_sites = _parse_sites(v_raw, "sites.v") if v_raw is not None else None

    cfg_kwargs = dict(
        kind=kind, model=model, engine_name=engine_name, tebd=tebd,
        ed_cap=pop("engine.cap", int, 12),
        dmrg_chi=pop("engine.dmrg_chi", int, 64),
        dmrg_seed=pop("engine.dmrg_seed", int, 0),
        protocol=protocol, pattern=pattern, ground=ground,
        frozen_site=frozen_site, obs_sites=obs_sites,
        w_site=w_site, v_sites=v_sites,
        t_max=pop("time.t_max", float, 5.0),
        step=pop("time.step", float, 0.05),
        otoc_threshold=pop("fit.otoc_threshold", float, 0.1),
        out_dir=out_dir, note=note,
    )
    if pairs:
        raise ConfigError(f"{sorted(pairs)[0]}: unknown key")
    try:
        return ExperimentConfig(**cfg_kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _fmt_sites(sites: tuple[int, ...]) -> str:
    if len(sites) > 1 and sites == tuple(range(sites[0], sites[-1] + 1)):
        return f"{sites[0]}..{sites[-1]}"
    return ",".join(str(s) for s in sites)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Render a configuration as key=value text; inverse of parse_config."""
    lines = [f"kind = {cfg.kind}"]
    if cfg.note is not None:
        lines.append(f"note = {cfg.note}")
    lines += [
        f"model.L = {cfg.model.L}",
        f"model.J = {cfg.model.J!r}",
        f"model.B = {cfg.model.B!r}",
        f"model.h_z = {cfg.model.h_z!r}",
        f"engine.name = {cfg.engine_name}",
    ]
    if cfg.tebd is not None:
        lines += [
            f"engine.dt = {cfg.tebd.dt!r}",
            f"engine.chi = {cfg.tebd.chi}",
            f"engine.svd_cutoff = {cfg.tebd.svd_cutoff!r}",
            f"engine.trunc_alarm = {cfg.tebd.trunc_alarm!r}",
        ]
    if cfg.ed_cap != 12:
        lines.append(f"engine.cap = {cfg.ed_cap}")
    lines += [f"engine.dmrg_chi = {cfg.dmrg_chi}", f"engine.dmrg_seed = {cfg.dmrg_seed}"]
    lines.append(f"state.protocol = {cfg.protocol}")
    if cfg.pattern is not None:
        lines.append(f"state.pattern = {cfg.pattern}")
    if cfg.ground is not None:
        lines += [
            f"state.ground.L = {cfg.ground.L}",
            f"state.ground.J = {cfg.ground.J!r}",
            f"state.ground.B = {cfg.ground.B!r}",
            f"state.ground.h_z = {cfg.ground.h_z!r}",
        ]
    if cfg.frozen_site is not None:
        lines.append(f"sites.frozen = {cfg.frozen_site}")
    if cfg.obs_sites is not None:
        lines.append(f"sites.obs = {_fmt_sites(cfg.obs_sites)}")
    if cfg.w_site is not None:
        lines.append(f"sites.w = {cfg.w_site}")
    if cfg.v_sites is not None:
        lines.append(f"sites.v = {_fmt_sites(cfg.v_sites)}")
    lines += [f"time.t_max = {cfg.t_max!r}", f"time.step = {cfg.step!r}"]
    if cfg.kind == "otoc":
        lines.append(f"fit.otoc_threshold = {cfg.otoc_threshold!r}")
    if cfg.out_dir is not None:
        lines.append(f"output.dir = {cfg.out_dir}")
    return "\n".join(lines) + "\n"


# --- presets ---------------------------------------------------------------

def preset(name: str, scale: str = "desk") -> ExperimentConfig:
    """Return a ready-made configuration for a standard experiment.

    ``scale="paper"`` uses the full published-figure parameters
    (L = 20..30, chi = 128); ``scale="desk"`` keeps the structure but
    shrinks to sizes that run in minutes on one core.
    """
    if scale not in ("paper", "desk"):
        raise ConfigError(f"scale: expected 'paper' or 'desk', got {scale!r}")
    chaotic = dict(J=1.0, B=0.8, h_z=0.5)
    mps128 = dict(engine_name="mps", tebd=TEBDConfig(dt=0.05, chi=128))
    if name == "fig1-panel":
        if scale == "paper":
            return ExperimentConfig(
                kind="qlif-trace", model=HamiltonianSpec(L=30, **chaotic),
                **mps128, frozen_site=10, obs_sites=(20,),
                t_max=10.0, step=0.05, out_dir="fig1-panel",
                note="distance-10 trace; rerun with obs 14 and 17 for d=4,7")
        return ExperimentConfig(
            kind="qlif-trace", model=HamiltonianSpec(L=12, **chaotic),
            engine_name="ed", frozen_site=4, obs_sites=(8,),
            t_max=6.0, step=0.05, out_dir="fig1-panel",
            note="desk scaling: d=4 at L=12 via exact diagonalization")
    if name == "fig2-heatmap":
        if scale == "paper":
            return ExperimentConfig(
                kind="qlif-heatmap", model=HamiltonianSpec(L=30, **chaotic),
                **mps128, frozen_site=10, obs_sites=tuple(range(11, 21)),
                t_max=10.0, step=0.05, out_dir="fig2-heatmap")
        return ExperimentConfig(
            kind="qlif-heatmap", model=HamiltonianSpec(L=12, **chaotic),
            engine_name="ed", frozen_site=4, obs_sites=tuple(range(5, 11)),
            t_max=6.0, step=0.05, out_dir="fig2-heatmap",
            note="desk scaling: distances 1..6 at L=12 via exact diagonalization")
    if name == "fig3-suite":
        if scale == "paper":
            return ExperimentConfig(
                kind="initial-state-suite", model=HamiltonianSpec(L=30, **chaotic),
                **mps128, frozen_site=10, obs_sites=(20,),
                t_max=10.0, step=0.05, out_dir="fig3-suite")
        return ExperimentConfig(
            kind="initial-state-suite", model=HamiltonianSpec(L=12, **chaotic),
            engine_name="ed", frozen_site=4, obs_sites=(7,),
            t_max=6.0, step=0.05, out_dir="fig3-suite",
            note="desk scaling: d=3 at L=12 via exact diagonalization")
    if name == "fig5-latetime":
        # Sites 9 and 13 put both the frozen and the observed spin on the
        # up sublattice of the alternating initial state; freezing a down
        # spin instead collapses the late-time integral to ~0.
        model = HamiltonianSpec(L=20, **chaotic)
        if scale == "paper":
            return ExperimentConfig(
                kind="latetime", model=model, engine_name="mps",
                tebd=TEBDConfig(dt=0.1, chi=128), frozen_site=9, obs_sites=(13,),
                t_max=40.0, step=0.1, out_dir="fig5-latetime")
        return ExperimentConfig(
            kind="latetime", model=model, engine_name="mps",
            tebd=TEBDConfig(dt=0.1, chi=64), frozen_site=9, obs_sites=(13,),
            t_max=40.0, step=0.1, out_dir="fig5-latetime",
            note="desk scaling: same geometry at chi=64")
    raise ConfigError(f"preset: unknown name {name!r}")


PRESET_NAMES = ("fig1-panel", "fig2-heatmap", "fig3-suite", "fig5-latetime")
