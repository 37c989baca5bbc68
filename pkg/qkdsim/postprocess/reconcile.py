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
Parity-based reconciliation.

Step 1 permutes the remnant key, cuts it into blocks of length l and
compares block parities; a mismatching block is bisected until the error is
found and deleted. Step 2 compares parities of random subsets until
step2_stop_n probes in a row come back clean. Every compared block or
subblock gives up its last bit, so each disclosed parity costs one bit.
Both parties only ever delete positions; no bit is flipped.

The bisection runs over the block as it was compared, so the located bit
can be one that a comparison already discarded. That error is then gone
without a further deletion: each located error is either one deletion or
one entry in located_discarded, and verdicts publish it under "located".
"""

import json
import logging
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field

from qkdsim.protocols.records import KeyMaterial
from qkdsim.protocols.records import KeyStage
from qkdsim.report_types import SessionAborted
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.transport.transcript import Sender
from qkdsim.utils.seeding import SeededRng
from qkdsim.utils.seeding import make_rng

logger = logging.getLogger(__name__)

BLOCK_LEN_CONSTANT = 0.73
MIN_BLOCK_LEN = 2
MAX_BLOCK_LEN = 64


class ReconcileConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    initial_block_len: int | None = Field(
        default=None,
        ge=MIN_BLOCK_LEN,
        description="Step-1 block length; None derives it from the error estimate",
    )
    step1_rounds: int = Field(
        default=2, ge=0, description="Permuted block passes in step 1"
    )
    step2_stop_n: int = Field(
        default=10,
        ge=1,
        description="Consecutive clean random-subset probes that end step 2",
    )
    max_step2_probes: int = Field(
        default=20000, ge=1, description="Hard cap on step-2 probes"
    )
    rng_seed: int | None = Field(
        default=None,
        ge=0,
        description="Seed for the public choices; None uses the session stream",
    )


def choose_block_len(error_rate: float) -> int:
    """l = clamp(round(0.73 / R), 2, 64); R = 0 is the caller's decision."""
    if not 0.0 < error_rate < 0.5:
        raise ValueError(
            f"choose_block_len needs 0 < R < 0.5, got {error_rate!r}; "
            f"skip reconciliation or use l={MAX_BLOCK_LEN} when R = 0"
        )
    return int(
        min(MAX_BLOCK_LEN, max(MIN_BLOCK_LEN, round(BLOCK_LEN_CONSTANT / error_rate)))
    )


def block_len_for(error_rate: float | None, cfg: ReconcileConfig) -> int:
    if cfg.initial_block_len is not None:
        return cfg.initial_block_len
    if error_rate is None or error_rate <= 0.0:
        return MAX_BLOCK_LEN
    return choose_block_len(min(error_rate, 0.49))


@dataclass
class ReconcileStats:
    block_len: int
    leaked_parities: int = 0
    discarded: int = 0
    deleted: int = 0
    located_discarded: int = 0
    bisect_comparisons: int = 0
    step2_probes: int = 0
    trace: list[dict[str, Any]] = field(default_factory=list)

    def trace_json(self) -> str:
        return json.dumps(self.trace, sort_keys=True)

    def dump_trace(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.trace_json(), encoding="utf-8")
        return path


class _Reconciler:
    """Shared state of one reconciliation: both keys and the alive mask."""

    def __init__(
        self,
        alice: KeyMaterial,
        bob: KeyMaterial,
        transcript: PublicTranscript,
        stats: ReconcileStats,
    ) -> None:
        self.alice_bits = alice.bits
        self.bob_bits = bob.bits
        self.slots = alice.slots
        self.alive = np.ones(len(alice), dtype=bool)
        self.transcript = transcript
        self.stats = stats

    def _parities(self, positions: np.ndarray) -> tuple[int, int]:
        return (
            int(np.sum(self.alice_bits[positions]) % 2),
            int(np.sum(self.bob_bits[positions]) % 2),
        )

    def _disclose(
        self, positions: np.ndarray, round_id: Any, block: int, level: int
    ) -> tuple[int, int]:
        parity_a, parity_b = self._parities(positions)
        self.transcript.publish(
            Sender.ALICE,
            Phase.RECONCILE_PARITY,
            {"round": round_id, "block": block, "level": level, "parity": parity_a},
        )
        self.stats.leaked_parities += 1
        return parity_a, parity_b

    def _discard(self, position: int, discarded: list[int]) -> None:
        if self.alive[position]:
            self.alive[position] = False
            self.stats.discarded += 1
            discarded.append(int(self.slots[position]))

    def compare(self, positions: np.ndarray, round_id: Any, block: int) -> bool:
        """Compare one block; returns True when an error was found."""
        discarded: list[int] = []
        deleted: list[int] = []
        located_slots: list[int] = []
        parity_a, parity_b = self._disclose(positions, round_id, block, 0)
        self._discard(int(positions[-1]), discarded)
        found = parity_a != parity_b
        action = "bisect" if found else "match"
        self.stats.trace.append(
            {
                "round": round_id,
                "block": block,
                "parity_a": parity_a,
                "parity_b": parity_b,
                "action": action,
            }
        )
        if found:
            located = self._locate(positions, round_id, block, discarded)
            slot = int(self.slots[located])
            located_slots.append(slot)
            if self.alive[located]:
                self.alive[located] = False
                self.stats.deleted += 1
                deleted.append(slot)
                action = f"delete:{slot}"
            else:
                self.stats.located_discarded += 1
                action = f"located-discarded:{slot}"
            self.stats.trace.append(
                {
                    "round": round_id,
                    "block": block,
                    "parity_a": None,
                    "parity_b": None,
                    "action": action,
                }
            )
        self.transcript.publish(
            Sender.BOB,
            Phase.RECONCILE_VERDICT,
            {
                "round": round_id,
                "block": block,
                "match": not found,
                "discarded": discarded,
                "deleted": deleted,
                "located": located_slots,
            },
        )
        return found

    def _locate(
        self, positions: np.ndarray, round_id: Any, block: int, discarded: list[int]
    ) -> int:
        """Bisect a block known to hold an odd number of errors down to one bit."""
        level = 0
        while len(positions) > 1:
            level += 1
            left = positions[: len(positions) // 2]
            parity_a, parity_b = self._disclose(left, round_id, block, level)
            self.stats.bisect_comparisons += 1
            self._discard(int(left[-1]), discarded)
            if parity_a != parity_b:
                positions = left
            else:
                positions = positions[len(positions) // 2 :]
            self.stats.trace.append(
                {
                    "round": round_id,
                    "block": block,
                    "parity_a": parity_a,
                    "parity_b": parity_b,
                    "action": f"level:{level}",
                }
            )
        return int(positions[0])

    def alive_positions(self) -> np.ndarray:
        return np.flatnonzero(self.alive)


def _check_inputs(alice: KeyMaterial, bob: KeyMaterial) -> None:
    if len(alice) != len(bob):
        raise ValueError(f"Key length mismatch: Alice {len(alice)}, Bob {len(bob)}")
    if not np.array_equal(alice.slots, bob.slots):
        raise ValueError("Alice's and Bob's keys cover different slots")
    for party, key in (("Alice", alice), ("Bob", bob)):
        if key.stage is not KeyStage.ESTIMATED:
            raise ValueError(
                f"{party}'s key is at stage {key.stage.label}, expected estimated"
            )


def reconcile(
    alice: KeyMaterial,
    bob: KeyMaterial,
    cfg: ReconcileConfig,
    transcript: PublicTranscript,
    rng: SeededRng | None = None,
    error_rate: float | None = None,
) -> tuple[KeyMaterial, KeyMaterial, ReconcileStats]:
    """Remove the disagreements between two estimated keys by parity comparisons."""
    _check_inputs(alice, bob)
    if rng is None or cfg.rng_seed is not None:
        rng = make_rng(cfg.rng_seed)
    stats = ReconcileStats(block_len=block_len_for(error_rate, cfg))
    state = _Reconciler(alice, bob, transcript, stats)

    for round_index in range(cfg.step1_rounds):
        order = rng.permutation(state.alive_positions())
        transcript.publish(
            Sender.ALICE,
            Phase.RECONCILE_PERMUTATION,
            {"round": round_index, "slots": state.slots[order].tolist()},
        )
        for block, start in enumerate(range(0, len(order), stats.block_len)):
            positions = order[start : start + stats.block_len]
            if len(positions) < 2:
                continue
            state.compare(positions, round_index, block)

    clean_streak = 0
    while clean_streak < cfg.step2_stop_n:
        if stats.step2_probes >= cfg.max_step2_probes:
            logger.warning(
                "Reconciliation stopped after %s step-2 probes", stats.step2_probes
            )
            break
        alive = state.alive_positions()
        if len(alive) < 2:
            raise SessionAborted("key exhausted during reconciliation")
        members = rng.random(len(alive)) < 0.5
        while int(np.sum(members)) < 2:
            members = rng.random(len(alive)) < 0.5
        subset = alive[members]
        transcript.publish(
            Sender.ALICE,
            Phase.RECONCILE_SUBSET,
            {"probe": stats.step2_probes, "slots": state.slots[subset].tolist()},
        )
        found = state.compare(subset, "step2", stats.step2_probes)
        stats.step2_probes += 1
        clean_streak = 0 if found else clean_streak + 1

    keep = state.alive
    if not np.any(keep):
        raise SessionAborted("key exhausted during reconciliation")
    logger.debug(
        "Reconciled %s -> %s bits (%s parities, %s deletions)",
        len(alice),
        int(np.sum(keep)),
        stats.leaked_parities,
        stats.deleted,
    )
    return (
        alice.advance(
            KeyStage.RECONCILED,
            alice.bits[keep],
            alice.slots[keep],
            stats.leaked_parities,
        ),
        bob.advance(
            KeyStage.RECONCILED, bob.bits[keep], bob.slots[keep], stats.leaked_parities
        ),
        stats,
    )


def discards_from_transcript(transcript: PublicTranscript) -> int:
    """Bits removed by reconciliation, counted from the public verdicts alone."""
    total = 0
    for record in transcript.by_phase(Phase.RECONCILE_VERDICT.value):
        payload = record.decode()
        total += len(payload["discarded"]) + len(payload["deleted"])
    return total
