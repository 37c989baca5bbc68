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
from collections.abc import Iterable
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any

import numpy as np

from qkdsim.quantum.hilbert import Ket2

logger = logging.getLogger(__name__)

NO_GUESS = -1


@dataclass
class LedgerEntry:
    """What Eve learned in one time slot."""

    slot: int = field(metadata={"description": "Time slot index"})
    action: str = field(metadata={"description": "Summary of Eve's interaction"})
    basis: str | None = field(
        default=None, metadata={"description": "Basis or operator Eve measured in"}
    )
    guess: int | None = field(
        default=None, metadata={"description": "Eve's estimate of Alice's bit"}
    )
    confidence: float = field(
        default=0.5,
        metadata={"description": "Probability Eve's guess is right, as Eve sees it"},
    )
    probe: Ket2 | None = field(
        default=None, metadata={"description": "Reduced probe state, when pure"}
    )

    def to_dict(self) -> dict[str, Any]:
        result = {
            "slot": self.slot,
            "action": self.action,
            "basis": self.basis,
            "guess": self.guess,
            "confidence": round(self.confidence, 12),
        }
        if self.probe is not None:
            result["probe"] = [
                [round(float(a.real), 12), round(float(a.imag), 12)]
                for a in self.probe.amplitudes
            ]
        return result


class EveLedger:
    def __init__(self) -> None:
        self._entries: dict[int, LedgerEntry] = {}

    def record(self, entry: LedgerEntry) -> LedgerEntry:
        self._entries[entry.slot] = entry
        return entry

    def get(self, slot: int) -> LedgerEntry | None:
        return self._entries.get(slot)

    def set_guess(self, slot: int, guess: int, confidence: float | None = None) -> None:
        entry = self._entries.get(slot)
        if entry is None:
            raise ValueError(f"No ledger entry for slot {slot}")
        entry.guess = int(guess)
        if confidence is not None:
            entry.confidence = float(confidence)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, slot: int) -> bool:
        return slot in self._entries

    def entries(self) -> list[LedgerEntry]:
        return [self._entries[slot] for slot in sorted(self._entries)]

    def guesses(self, slots: Iterable[int]) -> np.ndarray:
        """Eve's guess per slot, NO_GUESS where she has none."""
        values = []
        for slot in slots:
            entry = self._entries.get(int(slot))
            values.append(
                NO_GUESS if entry is None or entry.guess is None else entry.guess
            )
        return np.array(values, dtype=np.int8)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(entry.to_dict(), sort_keys=True) + "\n"
            for entry in self.entries()
        )

    def dump_jsonl(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_jsonl(), encoding="utf-8")
        return path
