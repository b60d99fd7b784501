"""Configuration layering and manifest tests."""

import json

import pytest

from pulsegabor.config import (
    SEED_ENV_VAR,
    ConfigError,
    RunConfig,
    load_config_file,
    resolve_config,
    write_manifest,
)


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.dt == 0.001
        assert cfg.duration == 12.0
        assert cfg.seed == 0
        assert cfg.mask_file is None
        assert cfg.snapshot_pulses == ()

    def test_snapshot_pulses_coerced_to_int_tuple(self):
        cfg = RunConfig(snapshot_pulses=[3, 10])
        assert cfg.snapshot_pulses == (3, 10)

    def test_validation(self):
        with pytest.raises(ConfigError):
            RunConfig(dt=0.0)
        with pytest.raises(ConfigError):
            RunConfig(duration=-1.0)
        with pytest.raises(ConfigError):
            RunConfig(eta=-0.5)
        with pytest.raises(ConfigError):
            RunConfig(ceiling=0.0)
        with pytest.raises(ConfigError):
            RunConfig(mask_size=4)  # even
        with pytest.raises(ConfigError):
            RunConfig(snapshot_pulses=(0,))


class TestLoadConfigFile:
    def test_flattens_sections(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            "[sim]\ndt = 0.002\nseed = 9\n\n[retina]\nsigma = 0.0\n",
            encoding="ascii",
        )
        assert load_config_file(path) == {"dt": 0.002, "seed": 9, "sigma": 0.0}

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text("[plumbing]\nx = 1\n", encoding="ascii")
        with pytest.raises(ConfigError, match="unknown config section"):
            load_config_file(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text("[sim]\ntdt = 0.1\n", encoding="ascii")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config_file(path)

    def test_top_level_value_rejected(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text("dt = 0.1\n", encoding="ascii")
        with pytest.raises(ConfigError):
            load_config_file(path)

    def test_malformed_toml(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text("[sim\ndt = ", encoding="ascii")
        with pytest.raises(ConfigError, match="malformed"):
            load_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config_file(tmp_path / "absent.toml")


class TestResolveConfig:
    def test_flags_beat_file_beats_env(self):
        cfg = resolve_config(
            flags={"seed": 7, "dt": None},
            file_values={"seed": 3, "dt": 0.004},
            env={SEED_ENV_VAR: "5"},
        )
        assert cfg.seed == 7  # flag wins
        assert cfg.dt == 0.004  # None flag does not override the file

    def test_file_beats_env_seed(self):
        cfg = resolve_config(file_values={"seed": 3}, env={SEED_ENV_VAR: "5"})
        assert cfg.seed == 3

    def test_env_seed_beats_defaults(self):
        cfg = resolve_config(env={SEED_ENV_VAR: "5"})
        assert cfg.seed == 5
        cfg = resolve_config(env={SEED_ENV_VAR: "5"}, defaults={"seed": 1})
        assert cfg.seed == 5

    def test_subcommand_defaults_lose_to_everything(self):
        cfg = resolve_config(defaults={"duration": 120.0}, env={})
        assert cfg.duration == 120.0
        cfg = resolve_config(
            file_values={"duration": 30.0}, defaults={"duration": 120.0}, env={}
        )
        assert cfg.duration == 30.0

    def test_bad_env_seed(self):
        with pytest.raises(ConfigError, match=SEED_ENV_VAR):
            resolve_config(env={SEED_ENV_VAR: "many"})

    def test_empty_env_seed_ignored(self):
        assert resolve_config(env={SEED_ENV_VAR: ""}).seed == 0

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError, match="unknown config fields"):
            resolve_config(flags={"voltage": 12}, env={})


class TestWriteManifest:
    def test_contents_and_stability(self, tmp_path):
        cfg = RunConfig(seed=4, snapshot_pulses=(3,))
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_manifest(a, cfg, {"subcommand": "filter"})
        write_manifest(b, cfg, {"subcommand": "filter"})
        assert a.read_bytes() == b.read_bytes()
        payload = json.loads(a.read_text(encoding="ascii"))
        assert payload["seed"] == 4
        assert payload["snapshot_pulses"] == [3]
        assert payload["subcommand"] == "filter"
        # no clocks, no timestamps: every key is a config field or extra
        assert "time" not in " ".join(payload).lower()

    def test_keys_sorted(self, tmp_path):
        path = tmp_path / "m.json"
        write_manifest(path, RunConfig())
        keys = list(json.loads(path.read_text(encoding="ascii")))
        assert keys == sorted(keys)
