import json

from src.config import DEFAULT_CONFIG, Config, get_config


def test_defaults():
    config = Config()
    assert config.get("simulation", "control_dt") == 0.001
    assert config.get("planner", "parameter_sets")["3"] == [0.01, 5.0, 5.0, 0.3]
    assert config.get("fic", "xi") == 0.9
    assert config.get("missing") is None
    assert config.get("simulation", "missing") is None


def test_user_file_merges_over_defaults(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"controller": {"K_JS": 20.0}, "fic": {"presets": {"soft": {
        "x_b": 0.1, "K0": 50.0, "F_max": 10.0}}}}), encoding="utf-8")
    config = Config(str(path))
    assert config.get("controller", "K_JS") == 20.0
    assert config.get("controller", "D_TS_linear") == 5.0
    assert set(config.get("fic", "presets")) == {"set1", "set2", "soft"}


def test_set_and_save(tmp_path):
    config = Config()
    config.set("simulation", "planning_rate", 50.0)
    path = tmp_path / "nested" / "saved.json"
    config.save_config(str(path))
    assert Config(str(path)).get("simulation", "planning_rate") == 50.0
    assert DEFAULT_CONFIG["simulation"]["planning_rate"] == 100.0


def test_get_all_is_a_copy():
    config = Config()
    snapshot = config.get_all()
    snapshot["ik"]["gain"] = -1.0
    assert config.get("ik", "gain") == 50.0


def test_singleton():
    assert get_config() is get_config()
