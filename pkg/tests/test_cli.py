# Copyright (c) Nex-AGI. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import argparse
import json
import math
from pathlib import Path

import pandas as pd
import pytest
from pydantic import ValidationError

from qkdsim.cli.config import THREADS_ENV
from qkdsim.cli.config import ExperimentConfig
from qkdsim.cli.config import add_experiment_arguments
from qkdsim.cli.config import apply_overrides
from qkdsim.cli.config import build_experiment_config
from qkdsim.cli.config import load_document
from qkdsim.cli.config import parse_seeds
from qkdsim.cli.config import usage_error_message
from qkdsim.cli.config import worker_count
from qkdsim.cli.experiment import aggregate
from qkdsim.cli.experiment import parse_sweep_values
from qkdsim.cli.experiment import run_sessions
from qkdsim.cli.experiment import sweep_parameter_name
from qkdsim.cli.experiment import with_parameter
from qkdsim.cli.selftest import QUICK
from qkdsim.cli.selftest import CheckResult
from qkdsim.cli.selftest import bracket_mismatches
from qkdsim.cli.selftest import check_no_cloning
from qkdsim.cli.selftest import check_uncertainty
from qkdsim.cli.selftest import check_undetectable
from qkdsim.cli.selftest import selftest_exit_code
from qkdsim.report_types import create_aborted_report
from qkdsim.report_types import create_completed_report
from qkdsim.utils.angles import parse_angle
from quick_start import main

PRESETS = Path(__file__).resolve().parent.parent / "configs" / "presets"


def _args(*argv):
    parser = argparse.ArgumentParser()
    add_experiment_arguments(parser)
    return parser.parse_args(list(argv))


@pytest.mark.parametrize(
    "value, expected",
    [
        (3, [3]),
        ("1..4", [1, 2, 3, 4]),
        ("5,2,9", [5, 2, 9]),
        ([1, "3..4"], [1, 3, 4]),
    ],
)
def test_parse_seeds(value, expected):
    assert parse_seeds(value) == expected


@pytest.mark.parametrize("value", ["4..1", "a,b", True, 1.5])
def test_parse_seeds_rejects(value):
    with pytest.raises(ValueError):
        parse_seeds(value)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("pi/8", math.pi / 8),
        ("-pi/4", -math.pi / 4),
        ("3pi/16", 3 * math.pi / 16),
        ("0.3", 0.3),
        (0.25, 0.25),
    ],
)
def test_parse_angle(text, expected):
    assert parse_angle(text) == pytest.approx(expected)


def test_parse_angle_rejects_garbage():
    with pytest.raises(ValueError, match="Invalid angle"):
        parse_angle("tau/2")


def test_overrides_nest_into_sections():
    args = _args("--p-flip", "0.1", "--s", "20", "--rng-seed", "7", "--n", "500")
    merged = apply_overrides({"channel": {"p_loss": 0.2}, "n": 100}, args)
    assert merged["channel"] == {"p_loss": 0.2, "p_flip": "0.1", "rng_seed": "7"}
    assert merged["amplify"] == {"s": "20"}
    assert merged["n"] == "500"


def test_config_document_and_flags(tmp_path):
    path = tmp_path / "experiment.yaml"
    path.write_text(
        "protocol: b92\ntheta: pi/16\nseeds: '0..2'\nreceiver_kind: projective\n",
        encoding="utf-8",
    )
    config = build_experiment_config(_args("--config", str(path), "--n", "300"))
    assert config.protocol == "b92"
    assert config.theta == pytest.approx(math.pi / 16)
    assert config.seeds == [0, 1, 2]
    assert config.n == 300
    assert config.session_config().receiver_kind == "projective"


def test_load_document_needs_a_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="must be a mapping"):
        load_document(path)


@pytest.mark.parametrize("path", sorted(PRESETS.glob("*.yaml")), ids=lambda p: p.stem)
def test_presets_are_valid(path):
    ExperimentConfig.model_validate(load_document(path))


def test_dump_records_needs_out():
    with pytest.raises(ValidationError, match="output directory"):
        ExperimentConfig(dump_records=True)


def test_usage_error_message_names_the_field():
    with pytest.raises(ValidationError) as info:
        ExperimentConfig.model_validate({"channel": {"p_flip": 2}})
    assert "invalid value for 'channel.p_flip'" in usage_error_message(info.value)


def test_worker_count(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_count(10) == 3
    assert worker_count(2) == 2
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ValueError, match="integer"):
        worker_count(4)
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ValueError, match="at least 1"):
        worker_count(4)


def test_results_do_not_depend_on_worker_count(monkeypatch):
    config = ExperimentConfig(protocol="bb84", n=500, m=20, seeds="0..3")
    monkeypatch.setenv(THREADS_ENV, "1")
    serial = run_sessions(config.session_config(), config.seeds)
    monkeypatch.setenv(THREADS_ENV, "4")
    pooled = run_sessions(config.session_config(), config.seeds)
    assert [run.report.to_dict() for run in serial] == [
        run.report.to_dict() for run in pooled
    ]


def test_aggregate_mean_std_and_stderr():
    reports = [
        create_completed_report("bb84", 0, raw_error_rate=0.1, keys_match=True),
        create_completed_report("bb84", 1, raw_error_rate=0.3, keys_match=True),
        create_aborted_report("bb84", 2, "test", raw_error_rate=0.2),
    ]
    summary = aggregate(reports)
    entry = summary["raw_error_rate"]
    assert entry["mean"] == pytest.approx(0.2)
    assert entry["std"] == pytest.approx(0.1)
    assert entry["stderr"] == pytest.approx(0.1 / math.sqrt(3))
    assert entry["count"] == 3
    assert summary["keys_match"]["count"] == 2
    assert "bell_beta" not in summary


def test_sweep_parameters():
    assert sweep_parameter_name("lambda") == "lam"
    assert sweep_parameter_name("θ") == "theta"
    with pytest.raises(ValueError, match="Unknown sweep parameter"):
        sweep_parameter_name("n")
    assert parse_sweep_values("theta", "pi/16,pi/8") == pytest.approx(
        [math.pi / 16, math.pi / 8]
    )
    assert parse_sweep_values("m", "10,20") == [10, 20]
    with pytest.raises(ValueError, match="at least one value"):
        parse_sweep_values("lam", " , ")


def test_with_parameter_switches_eve_on():
    config = ExperimentConfig(protocol="bb84")
    assert with_parameter(config, "lam", 0.5).eve.label == "opaque:0.5"
    assert with_parameter(config, "p_flip", 0.1).channel.p_flip == 0.1
    assert with_parameter(config, "s", 12).amplify.s == 12
    translucent = ExperimentConfig(protocol="b92", eve="translucent:0.2")
    with pytest.raises(ValueError, match="Cannot sweep lam"):
        with_parameter(translucent, "lam", 0.5)


def test_main_run_writes_report(tmp_path, capsys):
    code = main(
        [
            "run",
            "--protocol",
            "bb84",
            "--n",
            "600",
            "--m",
            "20",
            "--seeds",
            "0..2",
            "--out",
            str(tmp_path),
            "--dump-records",
        ]
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_sessions"] == 3
    assert report["n_aborted"] == 0
    assert report["aggregate"]["keys_match"]["mean"] == 1.0
    assert (tmp_path / "report.json").exists()
    assert len(pd.read_csv(tmp_path / "sessions.csv")) == 3
    assert (tmp_path / "records_seed1.csv").exists()
    assert (tmp_path / "transcript_seed2.jsonl").exists()
    assert (tmp_path / "ledger_seed0.jsonl").exists()


def test_main_reports_total_abort(capsys):
    code = main(
        ["run", "--n", "1000", "--m", "100", "--eve", "opaque:1", "--seeds", "0,1"]
    )
    assert code == 2
    report = json.loads(capsys.readouterr().out)
    assert report["n_aborted"] == 2
    assert all("eavesdropper" in item["reason"] for item in report["aborted"])


def test_main_reports_lost_channel_as_abort(capsys):
    code = main(
        [
            "run",
            "--protocol",
            "bb84-noisy",
            "--n",
            "1000",
            "--p-loss",
            "1.0",
            "--seeds",
            "1,2",
        ]
    )
    assert code == 2
    report = json.loads(capsys.readouterr().out)
    assert report["n_aborted"] == 2
    assert all("empty raw key" in item["reason"] for item in report["aborted"])


def test_main_rejects_invalid_values(capsys):
    assert main(["run", "--n", "0"]) == 1
    assert "invalid value for 'n'" in capsys.readouterr().err
    assert main(["run", "--dump-records"]) == 1


def test_main_rejects_unknown_choices():
    with pytest.raises(SystemExit) as info:
        main(["run", "--protocol", "e91"])
    assert info.value.code == 1


def test_main_sweep(tmp_path, capsys):
    code = main(
        [
            "sweep",
            "--parameter",
            "lam",
            "--values",
            "0,1",
            "--n",
            "1000",
            "--m",
            "100",
            "--seeds",
            "0..1",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["parameter"] == "lam"
    first, second = payload["rows"]
    assert first["n_aborted"] == 0
    assert second["n_aborted"] == 2
    assert second["raw_error_rate"] > first["raw_error_rate"]
    assert "raw_error_rate_stderr" in first
    assert (tmp_path / "sweep_lam.csv").exists()


def test_bracket_table_matches_printed_values():
    assert bracket_mismatches() == []


def test_cheap_acceptance_checks_pass():
    assert check_no_cloning(QUICK).passed
    assert check_uncertainty(QUICK).passed
    assert check_undetectable(QUICK).passed


def test_selftest_exit_code():
    assert selftest_exit_code([CheckResult("a", True)]) == 0
    assert selftest_exit_code([CheckResult("a", True), CheckResult("b", False)]) == 3
