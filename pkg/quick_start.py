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

"""Command-line entry point: run, sweep and selftest."""

import argparse
import json
import logging
import os
import sys
from datetime import datetime

import dotenv
from pydantic import ValidationError

from qkdsim.cli.config import add_experiment_arguments
from qkdsim.cli.config import build_experiment_config
from qkdsim.cli.config import usage_error_message
from qkdsim.cli.experiment import EXIT_OK
from qkdsim.cli.experiment import EXIT_USAGE
from qkdsim.cli.experiment import parse_sweep_values
from qkdsim.cli.experiment import report_json
from qkdsim.cli.experiment import run_experiment
from qkdsim.cli.experiment import sweep
from qkdsim.cli.experiment import sweep_parameter_name
from qkdsim.cli.experiment import sweep_records
from qkdsim.cli.experiment import write_sweep
from qkdsim.cli.selftest import run_selftest
from qkdsim.cli.selftest import selftest_exit_code
from qkdsim.protocols.hooks import LoggingHook

dotenv.load_dotenv()

# Create logger
logger = logging.getLogger()


def get_date():
    return datetime.now().strftime("%Y-%m-%d-%H-%M-%S")


now_date = get_date()


def setup_logger(workspace: str | None = None, level: int = logging.INFO):
    logger.setLevel(level)

    # Clear existing handlers to avoid duplication
    if logger.handlers:
        logger.handlers.clear()

    formatter = logging.Formatter(
        "[%(asctime)s] [%(levelname)s] [%(filename)s:%(lineno)d] %(message)s"
    )

    # Console goes to stderr; stdout carries the JSON report
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if workspace:
        os.makedirs(workspace, exist_ok=True)
        file_handler = logging.FileHandler(
            os.path.join(workspace, f"logs_{now_date}.log"), encoding="utf-8"
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)


class UsageParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(
        prog="qkdsim",
        description="Quantum key distribution simulator.",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log every public-channel record at DEBUG level",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run sessions over a seed list")
    add_experiment_arguments(run_parser)

    sweep_parser = subparsers.add_parser(
        "sweep", help="Aggregate sessions for each value of one parameter"
    )
    add_experiment_arguments(sweep_parser)
    sweep_parser.add_argument(
        "--parameter",
        type=str,
        required=True,
        help="lam, theta, strength, p_flip, s or m",
    )
    sweep_parser.add_argument(
        "--values",
        type=str,
        required=True,
        help="Comma-separated values, e.g. 0,0.5,1 or pi/16,pi/8",
    )

    selftest_parser = subparsers.add_parser("selftest", help="Run the acceptance suite")
    selftest_parser.add_argument(
        "--quick", action="store_true", help="Reduced sample sizes"
    )
    return parser


def _hooks(args) -> list[LoggingHook]:
    if not args.verbose:
        return []
    return [
        LoggingHook(transcript_logger="qkdsim.transcript", stage_logger="qkdsim.stages")
    ]


def run_command(args) -> int:
    config = build_experiment_config(args)
    setup_logger(config.out, logging.DEBUG if args.verbose else logging.INFO)
    report, status = run_experiment(config, _hooks(args))
    sys.stdout.write(report_json(report) + "\n")
    return status


def sweep_command(args) -> int:
    config = build_experiment_config(args)
    setup_logger(config.out, logging.DEBUG if args.verbose else logging.INFO)
    parameter = sweep_parameter_name(args.parameter)
    values = parse_sweep_values(parameter, args.values)
    frame = sweep(config, parameter, values, _hooks(args))
    write_sweep(config, parameter, frame)
    payload = {"parameter": parameter, "rows": sweep_records(frame)}
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def selftest_command(args) -> int:
    setup_logger(None)
    results = run_selftest(quick=args.quick)
    payload = [result.to_dict() for result in results]
    sys.stdout.write(json.dumps(payload, ensure_ascii=False, indent=2) + "\n")
    return selftest_exit_code(results)


COMMANDS = {"run": run_command, "sweep": sweep_command, "selftest": selftest_command}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        message = usage_error_message(exc)
    except (ValueError, OSError) as exc:
        message = str(exc)
    logger.error("Invalid configuration: %s", message)
    parser.print_usage(sys.stderr)
    sys.stderr.write(f"qkdsim: error: {message}\n")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
