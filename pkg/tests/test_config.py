import json

import pytest

from gala.config import ConfigError, RunConfig, load_config, parse_override_value, validate


def test_defaults_validate():
    cfg = load_config()
    assert cfg.train.learning_rate == 1e-4 and cfg.finetune.epochs == 50
    assert cfg.eval.runs == 50 and cfg.link.runs == 10
    assert cfg.model.decoder == "stable_sharpening"


def test_file_plus_dotted_overrides(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 3, "train": {"learning_rate": 0.01}}))
    cfg = load_config(p, {"train.max_epochs": 7, "data.synth.p_in": 0.5})
    assert cfg.seed == 3 and cfg.train.learning_rate == 0.01 and cfg.train.max_epochs == 7
    assert cfg.data.synth.p_in == 0.5 and cfg.data.synth.block_sizes == [40, 40, 40]


def test_override_value_parsing():
    assert parse_override_value("1e-3") == 1e-3
    assert parse_override_value("[1, 2]") == [1, 2]
    assert parse_override_value("null") is None
    assert parse_override_value("naive_sharpening") == "naive_sharpening"


@pytest.mark.parametrize("overrides, message", [
    ({"train.lr": 1}, "unknown key"),
    ({"bogus": 1}, "unknown key"),
    ({"train.max_epochs": 1.5}, "integer"),
    ({"train.learning_rate": "fast"}, "number"),
    ({"train.learning_rate": -1}, "positive"),
    ({"subspace.lam": 0}, "subspace.lam"),
    ({"subspace.mu": -2}, "subspace.mu"),
    ({"model.decoder": "sharp"}, "model.decoder"),
    ({"model.hidden_dims": []}, "hidden_dims"),
    ({"link.val_frac": 0.6, "link.test_frac": 0.5}, "link.val_frac"),
    ({"eval.affinity": "cosine"}, "eval.affinity"),
    ({"train.mode": "recon+link"}, "train.mode"),
    ({"data.features": "/nonexistent/x.csv"}, "file not found"),
    ({"data.synth.block_sizes": [0, 3]}, "block_sizes"),
    ({"train.seed": 1}, "unknown key"),
    ({"seed": 1, "seed.x": 1}, "not a section"),
    ({"seed.x": 1}, "must be an integer"),
])
def test_invalid_configs_rejected(overrides, message):
    with pytest.raises(ConfigError, match=message):
        load_config(None, overrides)


def test_bad_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError, match="valid JSON"):
        load_config(tmp_path / "bad.json")
    (tmp_path / "list.json").write_text("[]")
    with pytest.raises(ConfigError, match="object"):
        load_config(tmp_path / "list.json")


def test_command_specific_validation():
    cfg = RunConfig()
    with pytest.raises(ConfigError, match="data.features"):
        validate(cfg, "train")
    validate(cfg, "radius")


def test_synth_excludes_files(tmp_path):
    f = tmp_path / "x.csv"
    f.write_text("1\n")
    with pytest.raises(ConfigError, match="cannot be combined"):
        load_config(None, {"data.synth": {}, "data.features": str(f)})
