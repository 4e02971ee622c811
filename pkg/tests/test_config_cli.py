import json
import subprocess
import sys

import pytest

from conftest import small_corpus, write_corpus
from swarmtrader.cli import main
from swarmtrader.config import load_config, parse_config_file
from swarmtrader.errors import ConfigError


class TestLoadConfig:
    def test_defaults(self):
        config = load_config(env={})
        assert config.min_ev == 0.05
        assert config.max_stddev == 0.30
        assert config.weight_swarm == 0.70
        assert config.kelly_fraction == 0.25
        assert config.max_position_usdc == 10.0
        assert config.agents_per_market == 25
        assert config.scan_interval_secs == 5.0

    def test_file_then_env_then_override_precedence(self, tmp_path):
        path = tmp_path / "terminal.conf"
        path.write_text("MIN_EV = 0.10\nAGENTS_PER_MARKET = 7  # trimmed pool\n")
        config = load_config(file_path=path, env={"MIN_EV": "0.2"})
        assert config.min_ev == 0.2  # env beats file
        assert config.agents_per_market == 7
        config = load_config(file_path=path, env={"MIN_EV": "0.2"}, overrides={"min_ev": 0.3})
        assert config.min_ev == 0.3  # explicit override beats both

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "terminal.conf"
        path.write_text("NOT_A_KEY = 1\n")
        with pytest.raises(ConfigError):
            load_config(file_path=path, env={})

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            load_config(env={"MIN_EV": "lots"})

    def test_validation(self):
        with pytest.raises(ConfigError):
            load_config(env={"TRADING_MODE": "yolo"})
        with pytest.raises(ConfigError):
            load_config(env={"KELLY_FRACTION": "0"})
        with pytest.raises(ConfigError):
            load_config(env={"SCAN_INTERVAL_SECS": "-5"})

    def test_grammar(self, tmp_path):
        path = tmp_path / "c.conf"
        path.write_text(
            "# full-line comment\n"
            "\n"
            'MARKET_SOURCE = "https://api.example"\n'
            "MIN_VOLUME_USDC = 250 # inline comment\n"
        )
        values = parse_config_file(path)
        assert values == {"MARKET_SOURCE": "https://api.example", "MIN_VOLUME_USDC": "250"}

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "c.conf"
        path.write_text("JUST A LINE\n")
        with pytest.raises(ConfigError):
            parse_config_file(path)


class TestCheckConfig:
    def test_prints_paper_defaults(self, capsys, monkeypatch):
        for key in ("MIN_EV", "KELLY_FRACTION", "MAX_POSITION_USDC", "AGENTS_PER_MARKET"):
            monkeypatch.delenv(key, raising=False)
        assert main(["check-config"]) == 0
        out = capsys.readouterr().out
        assert "KELLY_FRACTION 0.25" in out
        assert "MIN_EV 0.05" in out
        assert "AGENTS_PER_MARKET 25" in out
        assert "MAX_POSITION_USDC 10" in out
        values = dict(line.split(" ", 1) for line in out.strip().splitlines())
        assert float(values["MAX_STDDEV"]) == 0.30
        assert float(values["WEIGHT_SWARM"]) == 0.70
        assert float(values["SCAN_INTERVAL_SECS"]) == 5.0
        assert float(values["CACHE_TTL_SECS"]) == 300.0

    def test_unknown_flag_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["check-config", "--frobnicate"])
        assert exc.value.code == 2

    def test_env_reflected(self, capsys, monkeypatch):
        monkeypatch.setenv("MIN_EV", "0.42")
        main(["check-config"])
        assert "MIN_EV 0.42" in capsys.readouterr().out


def run_args(tmp_path, fixture, data_dir, extra=()):
    return [
        "run",
        "--no-server",
        "--market-source", str(fixture),
        "--data-dir", str(data_dir),
        "--virtual-time", "true",
        "--fsync", "false",
        "--cycles", "3",
        "--agents-per-market", "8",
        "--min-agents", "3",
        "--sim-seed", "99",
        "--sim-noise-sigma", "0.4",
        *extra,
    ]


class TestRunCli:
    def test_run_and_replay_agree(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("MIN_EV", raising=False)
        fixture = write_corpus(tmp_path, small_corpus(n=5))
        data_dir = tmp_path / "data"
        assert main(run_args(tmp_path, fixture, data_dir)) == 0
        run_out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert run_out["cycles"] == 3

        assert main(["replay", "--data-dir", str(data_dir)]) == 0
        replay_out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert replay_out["ledger"] == run_out["ledger"]
        assert replay_out["cycles"] == 3

    def test_missing_persona_file_exit_1(self, tmp_path, capsys):
        fixture = write_corpus(tmp_path, small_corpus(n=2))
        code = main(
            run_args(tmp_path, fixture, tmp_path / "d", extra=["--persona-pool-path", "/nope.json"])
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_market_source_exit_1(self, tmp_path):
        assert main(["run", "--no-server", "--data-dir", str(tmp_path / "d"), "--cycles", "1"]) == 1

    def test_export_table(self, tmp_path, capsys):
        fixture = write_corpus(tmp_path, small_corpus(n=3))
        data_dir = tmp_path / "data"
        main(run_args(tmp_path, fixture, data_dir))
        capsys.readouterr()
        assert main(["export", "--data-dir", str(data_dir), "--table", "cycles"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 3
        assert json.loads(lines[0])["cycle_id"] == 1

    def test_console_entrypoint(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "swarmtrader.cli", "check-config"],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin"},
        )
        assert result.returncode == 0
        assert "KELLY_FRACTION 0.25" in result.stdout
