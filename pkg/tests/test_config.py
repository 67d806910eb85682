"""Configuration parsing, validation, serialization, and presets."""

import dataclasses

import pytest

from qliflow.config import (
    PRESET_NAMES,
    ConfigError,
    ExperimentConfig,
    parse_config,
    preset,
    serialize_config,
)
from qliflow.model import HamiltonianSpec
from qliflow.mps import TEBDConfig

MINIMAL = """\
kind = qlif-trace
model.L = 8
sites.frozen = 2
sites.obs = 5
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.kind == "qlif-trace"
    assert cfg.model == HamiltonianSpec(L=8, J=1.0, B=0.8, h_z=0.5)
    assert cfg.engine_name == "ed"
    assert cfg.tebd is None
    assert cfg.protocol == "neel"
    assert (cfg.frozen_site, cfg.obs_sites) == (2, (5,))
    assert (cfg.t_max, cfg.step) == (5.0, 0.05)


def test_comments_blanks_and_spacing_ignored():
    text = """
    # an experiment
    kind = qlif-trace

    model.L=6
      sites.frozen =  1
    sites.obs = 4   # not a comment, but parses as the int 4
    """.replace("# not a comment, but parses as the int 4", "")
    cfg = parse_config(text)
    assert cfg.model.L == 6
    assert cfg.obs_sites == (4,)


def test_site_list_forms():
    base = "kind = qlif-heatmap\nmodel.L = 12\nsites.frozen = 4\n"
    assert parse_config(base + "sites.obs = 5..10\n").obs_sites == (5, 6, 7, 8, 9, 10)
    assert parse_config(base + "sites.obs = 5,7,9\n").obs_sites == (5, 7, 9)
    with pytest.raises(ConfigError, match="sites.obs"):
        parse_config(base + "sites.obs = 10..5\n")
    with pytest.raises(ConfigError, match="sites.obs"):
        parse_config(base + "sites.obs = abc\n")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("model.L = 8\n", "kind"),
        (MINIMAL + "beam.width = 3\n", "beam.width"),
        (MINIMAL + "kind = otoc\n", "duplicate"),
        (MINIMAL + "engine.chi = 32\n", "engine.chi"),
        (MINIMAL.replace("kind = qlif-trace", "kind = warp"), "kind"),
        (MINIMAL + "engine.name = gpu\n", "engine.name"),
        (MINIMAL + "state.protocol = X\n", "state.protocol"),
        (MINIMAL + "model.J = fast\n", "model.J"),
        (MINIMAL + "time.t_max = -2\n", "time.t_max"),
        (MINIMAL + "time.step = 9\n", "time.step"),
        ("kind = qlif-trace\nmodel.L = 8\nsites.frozen = 2\n", "sites.obs"),
        (MINIMAL.replace("sites.obs = 5", "sites.obs = 2"), "sites.obs"),
        (MINIMAL.replace("sites.obs = 5", "sites.obs = 0"), "sites.obs"),
        (MINIMAL.replace("sites.obs = 5", "sites.obs = 9"), "sites.obs"),
        (MINIMAL.replace("sites.frozen = 2", "sites.frozen = 12"), "sites.frozen"),
        (MINIMAL + "just a line\n", "key = value"),
    ],
)
def test_rejects_and_names_the_offender(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_boundary_sites_are_one_based():
    text = "kind = qlif-trace\nmodel.L = 8\nsites.frozen = 1\nsites.obs = 8\n"
    cfg = parse_config(text)
    assert (cfg.frozen_site, cfg.obs_sites) == (1, (8,))


def test_mps_engine_requires_dt():
    text = MINIMAL + "engine.name = mps\n"
    with pytest.raises(ConfigError, match="engine.dt"):
        parse_config(text)
    cfg = parse_config(text + "engine.dt = 0.05\nengine.chi = 32\n")
    assert cfg.tebd == TEBDConfig(dt=0.05, chi=32)


def test_pattern_protocol_checks_length_and_alphabet():
    base = MINIMAL + "state.protocol = pattern\n"
    cfg = parse_config(base + "state.pattern = 01101001\n")
    assert cfg.pattern == "01101001"
    with pytest.raises(ConfigError, match="state.pattern"):
        parse_config(base)
    with pytest.raises(ConfigError, match="state.pattern"):
        parse_config(base + "state.pattern = 0110\n")
    with pytest.raises(ConfigError, match="state.pattern"):
        parse_config(base + "state.pattern = 0110100x\n")


def test_quench_protocols_constrain_the_model():
    with pytest.raises(ConfigError, match="state.protocol"):
        parse_config(MINIMAL + "state.protocol = A\n")  # h_z defaults to 0.5
    cfg = parse_config(MINIMAL + "state.protocol = A\nmodel.h_z = 0\n")
    assert cfg.protocol == "A"
    with pytest.raises(ConfigError, match="state.protocol"):
        parse_config(MINIMAL + "state.protocol = B\nmodel.h_z = 0\n")
    assert parse_config(MINIMAL + "state.protocol = B\n").protocol == "B"
    assert parse_config(MINIMAL + "state.protocol = N\n").protocol == "neel"


def test_ground_protocol_reads_companion_spec():
    text = MINIMAL + "state.protocol = ground\nstate.ground.h_z = 0\nstate.ground.B = 0.9\n"
    cfg = parse_config(text)
    assert cfg.ground == HamiltonianSpec(L=8, J=1.0, B=0.9, h_z=0.0)


def test_latetime_requires_chaotic_model():
    text = "kind = latetime\nmodel.L = 8\nmodel.h_z = 0\nsites.frozen = 2\nsites.obs = 5\n"
    with pytest.raises(ConfigError, match="model.h_z"):
        parse_config(text)


def test_otoc_kind_is_ed_only():
    text = (
        "kind = otoc\nmodel.L = 8\nsites.w = 2\nsites.v = 4,5,6\n"
        "engine.name = mps\nengine.dt = 0.05\n"
    )
    with pytest.raises(ConfigError, match="engine.name"):
        parse_config(text)
    cfg = parse_config(text.replace("engine.name = mps\nengine.dt = 0.05\n", ""))
    assert (cfg.w_site, cfg.v_sites) == (2, (4, 5, 6))


def test_trace_kind_takes_single_observed_site():
    with pytest.raises(ConfigError, match="sites.obs"):
        parse_config(MINIMAL.replace("sites.obs = 5", "sites.obs = 5,6"))


@pytest.mark.parametrize("name", PRESET_NAMES)
@pytest.mark.parametrize("scale", ["paper", "desk"])
def test_presets_round_trip(name, scale):
    cfg = preset(name, scale)
    assert parse_config(serialize_config(cfg)) == cfg


def test_preset_rejects_unknown():
    with pytest.raises(ConfigError, match="preset"):
        preset("fig9-panel")
    with pytest.raises(ConfigError, match="scale"):
        preset("fig1-panel", "poster")


def test_paper_scale_presets_carry_published_parameters():
    late = preset("fig5-latetime", "paper")
    assert late.model == HamiltonianSpec(L=20, J=1.0, B=0.8, h_z=0.5)
    assert (late.frozen_site, late.obs_sites) == (9, (13,))
    assert late.obs_sites[0] - late.frozen_site == 4
    # Both sites on the up sublattice of the alternating state (odd = up).
    assert late.frozen_site % 2 == 1 and late.obs_sites[0] % 2 == 1
    assert late.tebd == TEBDConfig(dt=0.1, chi=128)
    assert (late.t_max, late.step) == (40.0, 0.1)
    heat = preset("fig2-heatmap", "paper")
    assert heat.model.L == 30
    assert (heat.frozen_site, heat.obs_sites) == (10, tuple(range(11, 21)))
    assert heat.tebd == TEBDConfig(dt=0.05, chi=128)
    assert (heat.t_max, heat.step) == (10.0, 0.05)


def test_desk_scale_presets_fit_the_ed_engine():
    for name in ("fig1-panel", "fig2-heatmap", "fig3-suite"):
        cfg = preset(name, "desk")
        assert cfg.engine_name == "ed"
        assert cfg.model.L <= 12


def test_serialize_compacts_contiguous_ranges():
    cfg = preset("fig2-heatmap", "desk")
    assert "sites.obs = 5..10" in serialize_config(cfg)
    gap = dataclasses.replace(cfg, obs_sites=(5, 7, 9))
    assert "sites.obs = 5,7,9" in serialize_config(gap)


def test_config_is_immutable():
    cfg = parse_config(MINIMAL)
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.t_max = 9.0
