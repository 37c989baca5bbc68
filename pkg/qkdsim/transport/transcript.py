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
import logging
from dataclasses import dataclass
from dataclasses import field
from enum import Enum
from pathlib import Path
from typing import Any
from typing import Protocol

logger = logging.getLogger(__name__)


class Sender(str, Enum):
    ALICE = "alice"
    BOB = "bob"


class Phase(str, Enum):
    SIFT_BASES = "sift-bases"
    SIFT_CONFIRM = "sift-confirm"
    CONCLUSIVE_SLOTS = "conclusive-slots"
    EPR_OPERATORS = "epr-operators"
    BELL_DISCLOSURE = "bell-disclosure"
    CHECK_POSITIONS = "check-positions"
    CHECK_BITS = "check-bits"
    ESTIMATE_POSITIONS = "estimate-positions"
    ESTIMATE_BITS = "estimate-bits"
    RECONCILE_PERMUTATION = "reconcile-permutation"
    RECONCILE_SUBSET = "reconcile-subset"
    RECONCILE_PARITY = "reconcile-parity"
    RECONCILE_VERDICT = "reconcile-verdict"
    AMPLIFY_SUBSETS = "amplify-subsets"
    ABORT = "abort"


@dataclass(frozen=True)
class PublicRecord:
    """One message on the authenticated public channel."""

    index: int = field(metadata={"description": "Position in the transcript"})
    sender: Sender = field(metadata={"description": "Party that published"})
    phase: str = field(metadata={"description": "Stage-2 phase identifier"})
    payload: bytes = field(metadata={"description": "UTF-8 JSON message body"})

    def decode(self) -> Any:
        return json.loads(self.payload.decode("utf-8"))

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "sender": self.sender.value,
            "phase": self.phase,
            "payload": self.decode(),
        }


class PublicListener(Protocol):
    def after_publish(self, record: PublicRecord) -> None: ...


def encode_payload(payload: Any) -> bytes:
    if isinstance(payload, bytes):
        return payload
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


class PublicTranscript:
    """Append-only log of the public channel; every listener sees each record."""

    def __init__(self, listeners: list[PublicListener] | None = None) -> None:
        self._records: list[PublicRecord] = []
        self._listeners: list[PublicListener] = list(listeners or [])

    def subscribe(self, listener: PublicListener) -> None:
        self._listeners.append(listener)

    @property
    def records(self) -> tuple[PublicRecord, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(tuple(self._records))

    def by_phase(self, phase: str) -> list[PublicRecord]:
        return [record for record in self._records if record.phase == phase]

    def count(self, phase: str) -> int:
        return sum(1 for record in self._records if record.phase == phase)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False) + "\n"
            for record in self._records
        )

    def dump_jsonl(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_jsonl(), encoding="utf-8")
        return path

    def publish(
        self, sender: Sender | str, phase: Phase | str, payload: Any
    ) -> PublicRecord:
        """Append a record and hand it to every listener (Eve included)."""
        record = PublicRecord(
            index=len(self._records),
            sender=Sender(sender),
            phase=phase.value if isinstance(phase, Phase) else str(phase),
            payload=encode_payload(payload),
        )
        self._records.append(record)
        for listener in self._listeners:
            listener.after_publish(record)
        return record


def publish(
    transcript: PublicTranscript,
    sender: Sender | str,
    phase: Phase | str,
    payload: Any,
) -> PublicRecord:
    return transcript.publish(sender, phase, payload)
