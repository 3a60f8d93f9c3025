import pytest

from depthdenoise.config import (
    ConfigError,
    PipelineConfig,
    config_hash,
    dump_config,
    from_flat,
    load_config,
    parse_config_text,
)


def test_absent_file_gives_defaults():
    cfg = load_config()
    assert cfg == PipelineConfig()
    assert (cfg.bins, cfg.patch.size, cfg.min_region_px, cfg.epsilon_d) == (32, 5, 9, 1e-3)
    assert cfg.canny.gaussian_sigma == 1.4 and cfg.bilateral.sigma_s == 3.0


def test_single_key_file(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nbins=16\n\n")
    cfg = load_config(path)
    assert cfg.bins == 16
    assert cfg.patch == PipelineConfig().patch


def test_even_patch_rejected(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("patch.size=4\n")
    with pytest.raises(ConfigError, match="patch size must be odd"):
        load_config(path)


def test_parse_errors_name_line(tmp_path):
    with pytest.raises(ConfigError, match="c.cfg:2"):
        parse_config_text("bins=8\nnonsense\n", "c.cfg")
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config_text("colour=red\n")
    with pytest.raises(ConfigError, match=":2: duplicate"):
        parse_config_text("bins=8\nbins=9\n")


def test_invalid_value_names_field():
    with pytest.raises(ConfigError, match="bilateral.sigma_s"):
        from_flat({"bilateral.sigma_s": "-1"})
    with pytest.raises(ConfigError, match="bins"):
        from_flat({"bins": "many"})
    with pytest.raises(ConfigError, match="epsilon_d"):
        from_flat({"epsilon_d": "0"})


def test_joint_changes_apply_together():
    cfg = from_flat({"canny.low": "0.5", "canny.high": "0.6"})
    assert (cfg.canny.low_threshold, cfg.canny.high_threshold) == (0.5, 0.6)


def test_precedence_default_file_override(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("bins=16\nmin_region_px=4\n")
    assert load_config().bins == 32
    assert load_config(path).bins == 16
    cfg = load_config(path, {"bins": "8"})
    assert cfg.bins == 8 and cfg.min_region_px == 4


def test_auto_values_round_trip():
    cfg = from_flat({"alpha": "200", "search_radius": "40", "bilateral.sigma_r": "auto"})
    assert cfg.alpha == 200.0 and cfg.search_radius == 40 and cfg.bilateral.sigma_r is None
    again = load_config(overrides=dict(line.split("=", 1) for line in dump_config(cfg).splitlines()))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)
    assert config_hash(cfg) != config_hash(PipelineConfig())
