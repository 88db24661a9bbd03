from __future__ import annotations

import argparse
import json
from pathlib import Path

import pandas as pd
import pytest

from fttd_sim.exceptions import DegenerateSolutionError, InvalidArgumentError
from fttd_sim.experiments import cli
from fttd_sim.experiments.runner import ExperimentRunner
from fttd_sim.experiments.schema import RESULT_COLUMNS


def test_parse_seeds_accepts_lists_and_ranges() -> None:
    assert cli.parse_seeds("0,3,5-7") == [0, 3, 5, 6, 7]
    assert cli.parse_seeds("2") == [2]


@pytest.mark.parametrize("text", ["", "a", "5-2", "1,,x"])
def test_parse_seeds_rejects_garbage(text: str) -> None:
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_seeds(text)


def test_list_prints_kinds_and_profiles(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli.main(["list"]) == cli.EXIT_OK

    output = capsys.readouterr().out
    assert "gain-vs-frequency" in output
    assert "convergence-trace" in output
    assert "desk" in output


def test_parser_requires_a_command() -> None:
    with pytest.raises(SystemExit):
        cli.main([])


def test_config_error_exit_code(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid]\ncarrier_count = 1\n", encoding="utf-8")

    code = cli.main(["gain-vs-frequency", "--profile", "desk", "--config", str(bad)])

    assert code == cli.EXIT_CONFIG
    assert "grid.carrier_count" in capsys.readouterr().err


def test_degenerate_exit_code(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    def degenerate(self: ExperimentRunner) -> pd.DataFrame:
        raise DegenerateSolutionError("vanished", carriers=[3])

    monkeypatch.setattr(ExperimentRunner, "run", degenerate)

    code = cli.main(
        ["se-vs-Q", "--profile", "desk", "--strict", "--out", str(tmp_path / "x.csv")]
    )

    assert code == cli.EXIT_DEGENERATE


def test_other_library_errors_exit_one(monkeypatch: pytest.MonkeyPatch) -> None:
    def broken(self: ExperimentRunner) -> pd.DataFrame:
        raise InvalidArgumentError("bad input")

    monkeypatch.setattr(ExperimentRunner, "run", broken)

    assert cli.main(["se-vs-power", "--profile", "desk"]) == cli.EXIT_FAILURE


def test_gain_vs_frequency_run_writes_outputs(tmp_path: Path) -> None:
    out = tmp_path / "results"

    code = cli.main(["gain-vs-frequency", "--profile", "desk", "--out", str(out)])

    assert code == cli.EXIT_OK
    table = pd.read_csv(out / "gain-vs-frequency.csv", keep_default_na=False)
    assert list(table.columns) == list(RESULT_COLUMNS)
    assert len(table) == 3 * 201
    manifest = json.loads((out / "gain-vs-frequency.json").read_text(encoding="utf-8"))
    assert manifest["experiment"] == "gain-vs-frequency"
    assert manifest["profile"] == "desk"
    assert manifest["seeds"] == []
    assert manifest["rows"] == len(table)
    assert manifest["config"]["grid"]["carrier_count"] == 16
