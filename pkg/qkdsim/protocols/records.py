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

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from enum import IntEnum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from qkdsim.quantum.alphabets import Outcome
from qkdsim.quantum.alphabets import Signal
from qkdsim.quantum.alphabets import is_bit
from qkdsim.quantum.alphabets import outcome_label

logger = logging.getLogger(__name__)

RECORD_COLUMNS = [
    "slot",
    "alice_bit",
    "alice_alphabet",
    "eve_action",
    "bob_strategy",
    "bob_outcome",
]


@dataclass(frozen=True)
class TransmissionRecord:
    """Stage-1 bookkeeping for one time slot."""

    slot: int = field(metadata={"description": "Time slot index"})
    alice_bit: int = field(metadata={"description": "Bit Alice encoded or recorded"})
    alice_alphabet: str = field(
        metadata={"description": "Alphabet or operator Alice used"}
    )
    eve_action: str = field(metadata={"description": "Summary of Eve's interaction"})
    bob_strategy: str = field(metadata={"description": "Basis or operator Bob used"})
    bob_outcome: Outcome = field(
        metadata={"description": "Bob's bit, an erasure, or non-reception"}
    )
    source_state: int | None = field(
        default=None, metadata={"description": "EPR source state index, if any"}
    )

    @property
    def received(self) -> bool:
        return self.bob_outcome is not Signal.NO_RECEPTION

    @property
    def conclusive(self) -> bool:
        return is_bit(self.bob_outcome)

    @property
    def bases_match(self) -> bool:
        return self.alice_alphabet == self.bob_strategy

    def to_row(self) -> dict[str, Any]:
        return {
            "slot": self.slot,
            "alice_bit": self.alice_bit,
            "alice_alphabet": self.alice_alphabet,
            "eve_action": self.eve_action,
            "bob_strategy": self.bob_strategy,
            "bob_outcome": outcome_label(self.bob_outcome),
        }


def check_records(records: Sequence[TransmissionRecord]) -> None:
    slots = [record.slot for record in records]
    if any(b <= a for a, b in zip(slots, slots[1:])):
        raise ValueError("Transmission record slots must be strictly increasing")


def records_frame(records: Sequence[TransmissionRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.to_row() for record in records], columns=RECORD_COLUMNS)


def dump_records_csv(records: Sequence[TransmissionRecord], path: str | Path) -> Path:
    path = Path(path)
    records_frame(records).to_csv(path, index=False)
    return path


class KeyStage(IntEnum):
    RAW = 0
    ESTIMATED = 1
    RECONCILED = 2
    FINAL = 3

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class KeyMaterial:
    """
    An ordered bit sequence with its provenance.

    slots[i] is the time slot bit i came from (for final keys, the index of
    the amplification subset). Stages only move forward and never grow the key.
    """

    bits: np.ndarray
    slots: np.ndarray
    stage: KeyStage = KeyStage.RAW
    leaked_parities: int = 0

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8).reshape(-1)
        slots = np.array(self.slots, dtype=np.int64).reshape(-1)
        if bits.shape != slots.shape:
            raise ValueError(
                f"KeyMaterial has {bits.size} bits but {slots.size} slot labels"
            )
        if bits.size and int(bits.max()) > 1:
            raise ValueError("KeyMaterial bits must be 0 or 1")
        if self.leaked_parities < 0:
            raise ValueError("leaked_parities cannot be negative")
        bits.setflags(write=False)
        slots.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "stage", KeyStage(self.stage))

    def __len__(self) -> int:
        return int(self.bits.size)

    def advance(
        self,
        stage: KeyStage,
        bits: np.ndarray | None = None,
        slots: np.ndarray | None = None,
        leaked: int = 0,
    ) -> "KeyMaterial":
        """Next-stage key; stages never move backwards and length never grows."""
        if stage < self.stage:
            raise ValueError(
                f"Key stage cannot move from {self.stage.label} back to {stage.label}"
            )
        bits = self.bits if bits is None else bits
        slots = self.slots if slots is None else slots
        if len(bits) > len(self):
            raise ValueError("Key length cannot grow across stages")
        return KeyMaterial(bits, slots, stage, self.leaked_parities + int(leaked))

    def keep(self, mask_or_index: np.ndarray, stage: KeyStage | None = None):
        return self.advance(
            self.stage if stage is None else stage,
            self.bits[mask_or_index],
            self.slots[mask_or_index],
        )

    def without(self, positions: np.ndarray, stage: KeyStage | None = None):
        """Drop the given positions (indices into this key)."""
        mask = np.ones(len(self), dtype=bool)
        mask[np.asarray(positions, dtype=np.int64)] = False
        return self.keep(mask, stage)

    def bitstring(self) -> str:
        return "".join(str(int(b)) for b in self.bits)


def disagreement_rate(alice: KeyMaterial, bob: KeyMaterial) -> float | None:
    if len(alice) != len(bob):
        raise ValueError(f"Key length mismatch: {len(alice)} vs {len(bob)}")
    if not len(alice):
        return None
    return float(np.mean(alice.bits != bob.bits))
