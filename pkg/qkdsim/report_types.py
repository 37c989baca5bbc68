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

import json
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from enum import Enum
from typing import Any
from typing import Union


class SessionStatus(str, Enum):
    COMPLETED = "completed"
    ABORTED = "aborted"


class SessionAborted(Exception):
    """A protocol step decided to return to stage 1."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


P_FALSE_ASSUMPTION = "i.i.d. opaque eavesdropping with the configured intensity"


@dataclass
class SessionReport:
    """Aggregate statistics of one key-distribution session."""

    status: SessionStatus = field(
        metadata={"description": "Whether the session produced a key or aborted"},
    )
    protocol: str = field(metadata={"description": "bb84, bb84-noisy, b92 or epr"})
    seed: int = field(metadata={"description": "Seed the session streams derive from"})
    n_sent: int = field(default=0, metadata={"description": "Slots transmitted"})
    n_received: int = field(
        default=0, metadata={"description": "Slots in which Bob registered a photon"}
    )
    reception_rate: float | None = field(
        default=None, metadata={"description": "n_received / n_sent"}
    )
    pre_sift_accuracy: float | None = field(
        default=None,
        metadata={"description": "Share of received slots where Bob holds Alice's bit"},
    )
    sifted_length: int | None = field(
        default=None, metadata={"description": "Raw key length after sifting"}
    )
    raw_error_rate: float | None = field(
        default=None,
        metadata={"description": "True raw-key disagreement (simulation-only)"},
    )
    raw_error_rate_estimate: float | None = field(
        default=None, metadata={"description": "R from the public error estimate"}
    )
    erasure_rate: float | None = field(
        default=None, metadata={"description": "B92 erasures among received slots"}
    )
    erasure_anomaly: dict[str, Any] | None = field(
        default=None,
        metadata={"description": "Expected erasure rate, z-score and flag (B92)"},
    )
    bell_beta: float | None = field(
        default=None, metadata={"description": "Bell statistic from the rejected key"}
    )
    bell_beta_se: float | None = field(
        default=None, metadata={"description": "Standard error of bell_beta"}
    )
    bell_deltas: dict[str, float] | None = field(
        default=None, metadata={"description": "Delta(i, j) per operator pair"}
    )
    eve_detected: bool | None = field(
        default=None, metadata={"description": "Outcome of the eavesdropping test"}
    )
    p_false: float | None = field(
        default=None,
        metadata={"description": "Probability the noiseless check misses Eve"},
    )
    p_false_assumption: str | None = field(
        default=None, metadata={"description": "Model under which p_false holds"}
    )
    leaked_parities: int | None = field(
        default=None, metadata={"description": "Parities disclosed in reconciliation"}
    )
    reconciled_length: int | None = field(
        default=None, metadata={"description": "Key length after reconciliation"}
    )
    k_estimate: int | None = field(
        default=None, metadata={"description": "Upper bound on bits known by Eve"}
    )
    k_estimate_model_mismatch: bool | None = field(
        default=None,
        metadata={"description": "True when Eve's strategy is not the opaque model"},
    )
    final_key_length: int | None = field(
        default=None, metadata={"description": "Length of the final secret key"}
    )
    keys_match: bool | None = field(
        default=None, metadata={"description": "Alice's and Bob's final keys agree"}
    )
    eve_raw_agreement: float | None = field(
        default=None,
        metadata={"description": "Fraction of raw-key bits Eve's ledger predicts"},
    )
    eve_prediction_rate: float | None = field(
        default=None,
        metadata={"description": "Fraction of final-key bits Eve's ledger predicts"},
    )
    attempts: int = field(
        default=1, metadata={"description": "Stage-1 runs including restarts"}
    )
    reason: str | None = field(
        default=None, metadata={"description": "Abort reason, if aborted"}
    )

    def to_dict(self) -> dict[str, Any]:
        result = {}
        for item in fields(self):
            value = getattr(self, item.name)
            result[item.name] = value.value if isinstance(value, Enum) else value
        return result

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)


ReportType = Union[SessionReport, dict[str, Any]]

STATISTIC_FIELDS = [
    item.name
    for item in fields(SessionReport)
    if item.name not in {"status", "protocol", "seed", "reason"}
]


def create_completed_report(
    protocol: str, seed: int, **stats: Any
) -> SessionReport:
    return SessionReport(
        status=SessionStatus.COMPLETED, protocol=protocol, seed=seed, **stats
    )


def create_aborted_report(
    protocol: str, seed: int, reason: str, **stats: Any
) -> SessionReport:
    return SessionReport(
        status=SessionStatus.ABORTED,
        protocol=protocol,
        seed=seed,
        reason=reason,
        **stats,
    )


def _status_of(report: Any) -> Any:
    if isinstance(report, dict):
        return report.get("status")
    return getattr(report, "status", None)


def is_completed_report(report: Any) -> bool:
    status = _status_of(report)
    return status == SessionStatus.COMPLETED or status == SessionStatus.COMPLETED.value


def is_aborted_report(report: Any) -> bool:
    status = _status_of(report)
    return status == SessionStatus.ABORTED or status == SessionStatus.ABORTED.value


def extract_abort_reason(report: Any) -> str | None:
    if isinstance(report, dict):
        return report.get("reason")
    return getattr(report, "reason", None)
