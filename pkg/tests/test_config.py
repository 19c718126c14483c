"""Configuration file parsing, validation and hashing."""

import dataclasses

import pytest

from waveselect.config import ConfigError, PipelineConfig, load_config, parse_config


def test_empty_text_gives_defaults():
    assert parse_config("") == PipelineConfig()
    assert parse_config("# only a comment\n\n") == PipelineConfig()


def test_defaults_are_valid():
    PipelineConfig().validate()


def test_values_comments_and_whitespace():
    cfg = parse_config(
        "num_scenarios = 500   # small run\n"
        "  snr_db=7.5\n"
        "knn_k_grid = 3, 7\n"
        "tree_depth_grid = 2,inf\n"
        "weights_mixed = 0.5,0.25,0.25\n"
    )
    assert cfg.num_scenarios == 500
    assert cfg.snr_db == 7.5
    assert cfg.knn_k_grid == (3, 7)
    assert cfg.tree_depth_grid == (2, None)
    assert cfg.weights_mixed == (0.5, 0.25, 0.25)


@pytest.mark.parametrize("text, fragment", [
    ("bogus = 1", "unknown key"),
    ("num_scenarios = 10\nnum_scenarios = 20", "duplicate key"),
    ("num_scenarios", "expected 'key = value'"),
    ("num_scenarios = ten", "bad value"),
    ("snr_db = nan", "finite"),
    ("guard_g1 = 9\nguard_g2 = 4", "guard widths"),
    ("knn_k_grid = 0", "knn_k_grid"),
    ("mlp_lr_grid = -0.1", "mlp_lr_grid"),
    ("workers = 0", "workers"),
    ("num_scenarios = 0", "num_scenarios"),
    ("weights_embb = 0.5,0.5,0.5", "sum to 1"),
])
def test_rejects_bad_input(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_error_reports_line_number():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config("snr_db = 1\n\nnope = 2\n")


def test_to_text_round_trip():
    cfg = dataclasses.replace(PipelineConfig(), snr_db=0.1 + 0.2, tree_depth_grid=(1, None), master_seed=7)
    assert parse_config(cfg.to_text()) == cfg


def test_digest_ignores_workers_only():
    base = PipelineConfig()
    assert dataclasses.replace(base, workers=8).digest() == base.digest()
    assert dataclasses.replace(base, master_seed=base.master_seed + 1).digest() != base.digest()
    assert dataclasses.replace(base, guard_g3=base.guard_g3 + 1).digest() != base.digest()


def test_load_config_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("master_seed = 11\n", encoding="utf-8")
    assert load_config(path).master_seed == 11
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.cfg")


def test_sub_configs_carry_settings():
    cfg = dataclasses.replace(PipelineConfig(), guard_g1=1, guard_g2=2, guard_g3=3, snr_db=5.0)
    lab = cfg.labeler_config()
    assert lab.metric.snr_db == 5.0
    assert cfg.scenario_config().num_scenarios == cfg.num_scenarios
    assert cfg.split_spec().seed == cfg.master_seed
