import pytest

from graphlcd.scenegraph import EDGE_DIM, NODE_DIM
from graphlcd.config import ConfigError, PipelineConfig, parse_config_text


def test_defaults():
    cfg = PipelineConfig()
    assert (cfg.margin_px, cfg.beta_s, cfg.alpha, cfg.wl_iterations) == (25.0, 0.3, 2.0, 50)
    assert cfg.temporal_mode == "clamped" and cfg.min_gap == 30
    assert cfg.layer_sizes == (5, 16, 16, 1)
    assert (NODE_DIM, EDGE_DIM) == (8, 4) and cfg.match_tolerance == 0.4


def test_file_then_override(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nbeta-s = 0.25\nmode = two_tier  # inline\nhidden_layers = 8,4\n")
    cfg = PipelineConfig.from_file(p)
    assert cfg.beta_s == 0.25 and cfg.mode == "two_tier" and cfg.hidden_layers == (8, 4)
    cfg2 = cfg.override({"beta_s": "0.5", "mode": None})
    assert cfg2.beta_s == 0.5 and cfg2.mode == "two_tier"


@pytest.mark.parametrize("text", ["nope = 1", "beta_s", "beta_s = abc", "beta_s = 2", "mode = tiered"])
def test_bad_config(text):
    with pytest.raises(ConfigError):
        PipelineConfig().override(parse_config_text(text))


def test_snapshot_round_trip():
    cfg = PipelineConfig(alpha=1.5, denylist=("dog", "cat"))
    again = PipelineConfig().override(parse_config_text(cfg.snapshot()))
    assert again == cfg.replace(denylist=("cat", "dog"))
    assert "workers" not in cfg.snapshot()
