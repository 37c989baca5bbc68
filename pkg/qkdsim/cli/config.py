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
Experiment configuration: a YAML (or JSON) document plus command-line
overrides, validated into one ExperimentConfig.
"""

import argparse
import logging
import os
import re
from pathlib import Path
from typing import Any

import yaml
from pydantic import Field
from pydantic import ValidationError
from pydantic import field_validator
from pydantic import model_validator

from qkdsim.protocols.session import SessionConfig
from qkdsim.utils.angles import parse_angle

logger = logging.getLogger(__name__)

THREADS_ENV = "QKD_SIM_THREADS"

SEED_RANGE_PATTERN = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")


def parse_seeds(value: Any) -> list[int]:
    """An int, a list, "a..b" (inclusive) or a comma list such as "1,4,9"."""
    if isinstance(value, bool):
        raise ValueError(f"Invalid seeds: {value!r}")
    if isinstance(value, int):
        return [value]
    if isinstance(value, (list, tuple)):
        seeds = []
        for item in value:
            seeds.extend(parse_seeds(item))
        return seeds
    if isinstance(value, str):
        match = SEED_RANGE_PATTERN.match(value)
        if match:
            first, last = int(match.group(1)), int(match.group(2))
            if last < first:
                raise ValueError(f"Seed range {value!r} is empty")
            return list(range(first, last + 1))
        parts = [part.strip() for part in value.split(",") if part.strip()]
        if parts and all(part.isdigit() for part in parts):
            return [int(part) for part in parts]
    raise ValueError(f"Invalid seeds: {value!r}")


class ExperimentConfig(SessionConfig):
    seeds: list[int] = Field(default_factory=lambda: [0], description="Session seeds")
    out: str | None = Field(default=None, description="Directory for CSV/JSON files")
    dump_records: bool = Field(
        default=False, description="Write per-slot records, transcripts and ledgers"
    )

    @field_validator("theta", mode="before")
    @classmethod
    def _parse_theta(cls, value: Any) -> Any:
        return parse_angle(value) if isinstance(value, str) else value

    @field_validator("seeds", mode="before")
    @classmethod
    def _parse_seeds(cls, value: Any) -> list[int]:
        seeds = parse_seeds(value)
        if not seeds:
            raise ValueError("seed list must not be empty")
        if any(seed < 0 for seed in seeds):
            raise ValueError("seeds must be non-negative")
        return seeds

    @model_validator(mode="after")
    def _check_outputs(self) -> "ExperimentConfig":
        if self.dump_records and self.out is None:
            raise ValueError("dump_records needs an output directory (out)")
        return self

    def session_config(self) -> SessionConfig:
        fields = SessionConfig.model_fields.keys()
        return SessionConfig.model_validate(
            {name: getattr(self, name) for name in fields}
        )


# flag -> (path into the config document, argparse options)
FLAGS: dict[str, tuple[tuple[str, ...], dict[str, Any]]] = {
    "--protocol": (("protocol",), {"choices": ["bb84", "bb84-noisy", "b92", "epr"]}),
    "--n": (("n",), {}),
    "--seeds": (("seeds",), {"help": "a..b, a,b,c or a single seed"}),
    "--eve": (
        ("eve",),
        {"help": "none | opaque:LAMBDA | translucent:S | entangled[:OVERLAP|:A,B]"},
    ),
    "--alphabet-mode": (("alphabet_mode",), {"choices": ["both", "circular-only"]}),
    "--theta": (("theta",), {"help": "float or pi expression such as pi/8"}),
    "--receiver-kind": (("receiver_kind",), {"choices": ["projective", "povm"]}),
    "--m": (("m",), {}),
    "--sample-fraction": (("sample_fraction",), {}),
    "--r-max": (("r_max",), {}),
    "--beta-threshold-sigmas": (("beta_threshold_sigmas",), {}),
    "--p-flip": (("channel", "p_flip"), {}),
    "--p-loss": (("channel", "p_loss"), {}),
    "--rng-seed": (("channel", "rng_seed"), {}),
    "--initial-block-len": (("reconcile", "initial_block_len"), {}),
    "--step1-rounds": (("reconcile", "step1_rounds"), {}),
    "--step2-stop-n": (("reconcile", "step2_stop_n"), {}),
    "--s": (("amplify", "s"), {}),
    "--max-attempts": (("max_attempts",), {}),
    "--epr-postprocess": (("epr_postprocess",), {"choices": ["true", "false"]}),
    "--out": (("out",), {}),
}


def _dest(flag: str) -> str:
    return flag.removeprefix("--").replace("-", "_")


def add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config", type=str, default=None, help="YAML or JSON experiment document"
    )
    for flag, (_, options) in FLAGS.items():
        parser.add_argument(flag, dest=_dest(flag), default=None, **options)
    parser.add_argument(
        "--dump-records",
        dest="dump_records",
        action="store_true",
        default=None,
        help="Also write per-slot CSV and transcript/ledger JSONL",
    )


def load_document(path: str | Path) -> dict[str, Any]:
    text = Path(path).read_text(encoding="utf-8")
    document = yaml.safe_load(text) or {}
    if not isinstance(document, dict):
        raise ValueError(f"Experiment document {path} must be a mapping")
    return document


def apply_overrides(document: dict[str, Any], args: argparse.Namespace) -> dict:
    merged = {key: value for key, value in document.items()}
    for flag, (path, _) in FLAGS.items():
        value = getattr(args, _dest(flag), None)
        if value is None:
            continue
        target = merged
        for key in path[:-1]:
            target[key] = dict(target.get(key) or {})
            target = target[key]
        target[path[-1]] = value
    if getattr(args, "dump_records", None):
        merged["dump_records"] = True
    return merged


def build_experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    document = load_document(args.config) if getattr(args, "config", None) else {}
    return ExperimentConfig.model_validate(apply_overrides(document, args))


def usage_error_message(exc: ValidationError) -> str:
    lines = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"]) or "config"
        lines.append(f"invalid value for '{location}': {error['msg']}")
    return "; ".join(lines)


def worker_count(n_tasks: int) -> int:
    raw = os.environ.get(THREADS_ENV)
    limit = os.cpu_count() or 1
    if raw:
        try:
            limit = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        if limit < 1:
            raise ValueError(f"{THREADS_ENV} must be at least 1, got {limit}")
    return max(1, min(limit, n_tasks))
