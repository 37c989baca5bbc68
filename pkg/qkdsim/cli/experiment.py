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

"""
Runs sessions over a seed list, aggregates them and writes the report.

Seeds go to a thread pool; results come back in seed order, so the report
does not depend on the worker count.
"""

import json
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from qkdsim.cli.config import ExperimentConfig
from qkdsim.cli.config import worker_count
from qkdsim.protocols.hooks import SessionHook
from qkdsim.protocols.records import dump_records_csv
from qkdsim.protocols.session import SessionConfig
from qkdsim.protocols.session import SessionRun
from qkdsim.protocols.session import execute_session
from qkdsim.report_types import SessionReport
from qkdsim.report_types import extract_abort_reason
from qkdsim.report_types import is_aborted_report
from qkdsim.utils.angles import parse_angle

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ALL_ABORTED = 2

# Per-session statistics that aggregate as numbers; booleans count as 0/1.
NUMERIC_FIELDS = [
    "n_sent",
    "n_received",
    "reception_rate",
    "pre_sift_accuracy",
    "pre_sift_error",
    "sifted_length",
    "raw_error_rate",
    "raw_error_rate_estimate",
    "erasure_rate",
    "bell_beta",
    "bell_beta_se",
    "eve_detected",
    "p_false",
    "leaked_parities",
    "reconciled_length",
    "k_estimate",
    "final_key_length",
    "keys_match",
    "eve_raw_agreement",
    "eve_prediction_rate",
    "attempts",
]

SWEEP_PARAMETERS = ("lam", "theta", "strength", "p_flip", "s", "m")
SWEEP_ALIASES = {"lambda": "lam", "λ": "lam", "θ": "theta"}
INTEGER_PARAMETERS = frozenset(["s", "m"])


def run_sessions(
    config: SessionConfig, seeds: Sequence[int], hooks: Sequence[SessionHook] = ()
) -> list[SessionRun]:
    """One session per seed, returned in seed order."""
    workers = worker_count(len(seeds))
    logger.info(
        "Running %s %s session(s) on %s worker(s)", len(seeds), config.protocol, workers
    )
    if workers == 1:
        return [execute_session(config, seed, hooks) for seed in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda seed: execute_session(config, seed, hooks), seeds))


def _number(value: Any) -> float:
    if value is None:
        return math.nan
    return float(value)


def sessions_frame(reports: Sequence[SessionReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        row = report.to_dict()
        accuracy = row.get("pre_sift_accuracy")
        row["pre_sift_error"] = None if accuracy is None else 1.0 - accuracy
        rows.append(row)
    return pd.DataFrame(rows)


def _clean(value: float) -> float | None:
    return None if value is None or not math.isfinite(value) else float(value)


def aggregate(reports: Sequence[SessionReport]) -> dict[str, dict[str, Any]]:
    """mean, std, stderr and count per statistic, over sessions that report it."""
    frame = sessions_frame(reports)
    result: dict[str, dict[str, Any]] = {}
    for name in NUMERIC_FIELDS:
        if name not in frame:
            continue
        column = frame[name].map(_number).astype(float).dropna()
        count = int(column.size)
        if not count:
            continue
        std = float(column.std(ddof=1)) if count > 1 else math.nan
        result[name] = {
            "mean": _clean(float(column.mean())),
            "std": _clean(std),
            "stderr": _clean(std / math.sqrt(count)),
            "count": count,
        }
    return result


def abort_summary(reports: Sequence[SessionReport]) -> list[dict[str, Any]]:
    return [
        {"seed": report.seed, "reason": extract_abort_reason(report)}
        for report in reports
        if is_aborted_report(report)
    ]


def build_report(
    config: ExperimentConfig, reports: Sequence[SessionReport]
) -> dict[str, Any]:
    aborted = abort_summary(reports)
    return {
        "config": config.model_dump(mode="json"),
        "sessions": [report.to_dict() for report in reports],
        "aggregate": aggregate(reports),
        "aborted": aborted,
        "n_sessions": len(reports),
        "n_aborted": len(aborted),
    }


def report_json(report: dict[str, Any]) -> str:
    return json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True)


def _json_cell(value: Any) -> str | None:
    return None if value is None else json.dumps(value, sort_keys=True)


def _csv_frame(reports: Sequence[SessionReport]) -> pd.DataFrame:
    frame = sessions_frame(reports)
    for name in ("erasure_anomaly", "bell_deltas"):
        if name in frame:
            frame[name] = frame[name].map(_json_cell)
    return frame


def write_outputs(
    config: ExperimentConfig, report: dict[str, Any], runs: Sequence[SessionRun]
) -> Path | None:
    if config.out is None:
        return None
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(report) + "\n", encoding="utf-8")
    _csv_frame([run.report for run in runs]).to_csv(out / "sessions.csv", index=False)
    if config.dump_records:
        for run in runs:
            seed = run.report.seed
            dump_records_csv(run.records, out / f"records_seed{seed}.csv")
            if run.transcript is not None:
                run.transcript.dump_jsonl(out / f"transcript_seed{seed}.jsonl")
            if run.eve is not None:
                run.eve.ledger.dump_jsonl(out / f"ledger_seed{seed}.jsonl")
    logger.info("Report is saved at: %s", out / "report.json")
    return out


def run_experiment(
    config: ExperimentConfig, hooks: Sequence[SessionHook] = ()
) -> tuple[dict[str, Any], int]:
    """The full report and the exit status (2 when every session aborted)."""
    runs = run_sessions(config.session_config(), config.seeds, hooks)
    reports = [run.report for run in runs]
    report = build_report(config, reports)
    write_outputs(config, report, runs)
    if report["n_aborted"] == len(reports):
        logger.warning("All %s session(s) aborted", len(reports))
        return report, EXIT_ALL_ABORTED
    return report, EXIT_OK


def sweep_parameter_name(parameter: str) -> str:
    name = SWEEP_ALIASES.get(parameter.strip(), parameter.strip().lower())
    if name not in SWEEP_PARAMETERS:
        raise ValueError(
            f"Unknown sweep parameter {parameter!r}; "
            f"choose from {', '.join(SWEEP_PARAMETERS)}"
        )
    return name


def parse_sweep_values(parameter: str, text: str | Sequence[Any]) -> list[float]:
    name = sweep_parameter_name(parameter)
    items = text.split(",") if isinstance(text, str) else list(text)
    items = [item for item in items if str(item).strip()]
    if not items:
        raise ValueError("sweep needs at least one value")
    if name == "theta":
        return [parse_angle(item) for item in items]
    if name in INTEGER_PARAMETERS:
        return [int(float(item)) for item in items]
    return [float(item) for item in items]


def _eve_for(config: ExperimentConfig, kind: str, field_name: str, value: Any):
    current = config.eve.model_dump()
    if config.eve.kind not in ("none", kind):
        raise ValueError(
            f"Cannot sweep {field_name} with eve {config.eve.kind!r}; use {kind}"
        )
    current.update({"kind": kind, field_name: value})
    return current


def with_parameter(
    config: ExperimentConfig, parameter: str, value: Any
) -> ExperimentConfig:
    """A copy of config with one sweepable parameter replaced, revalidated."""
    name = sweep_parameter_name(parameter)
    data = config.model_dump()
    if name == "lam":
        data["eve"] = _eve_for(config, "opaque", "lam", value)
    elif name == "strength":
        data["eve"] = _eve_for(config, "translucent", "strength", value)
    elif name == "p_flip":
        data["channel"] = {**data["channel"], "p_flip": value}
    elif name == "s":
        data["amplify"] = {**data["amplify"], "s": value}
    else:
        data[name] = value
    return ExperimentConfig.model_validate(data)


def sweep(
    config: ExperimentConfig,
    parameter: str,
    values: Sequence[Any],
    hooks: Sequence[SessionHook] = (),
) -> pd.DataFrame:
    """
    One aggregated row per value: the value, the mean of every statistic
    and a matching <statistic>_stderr column.
    """
    name = sweep_parameter_name(parameter)
    rows = []
    for value in values:
        point = with_parameter(config, name, value)
        runs = run_sessions(point.session_config(), point.seeds, hooks)
        reports = [run.report for run in runs]
        summary = aggregate(reports)
        row: dict[str, Any] = {"value": value, "n_aborted": len(abort_summary(reports))}
        for statistic in NUMERIC_FIELDS:
            entry = summary.get(statistic, {})
            row[statistic] = entry.get("mean")
        for statistic in NUMERIC_FIELDS:
            row[f"{statistic}_stderr"] = summary.get(statistic, {}).get("stderr")
        rows.append(row)
        logger.info("Sweep %s=%s done (%s aborted)", name, value, row["n_aborted"])
    return pd.DataFrame(rows)


def sweep_records(frame: pd.DataFrame) -> list[dict[str, Any]]:
    records = []
    for row in frame.to_dict(orient="records"):
        records.append({key: _jsonable(value) for key, value in row.items()})
    return records


def _jsonable(value: Any) -> Any:
    if value is None:
        return None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _clean(float(value))
    return value


def write_sweep(config: ExperimentConfig, parameter: str, frame: pd.DataFrame):
    if config.out is None:
        return None
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"sweep_{sweep_parameter_name(parameter)}.csv"
    frame.to_csv(path, index=False)
    logger.info("Sweep table is saved at: %s", path)
    return path
