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
BB84 with the rectilinear and circular alphabets.

Stage 1 sends one photon per slot; the noiseless stage 2 sifts on the
public basis disclosures and then compares m random raw-key bits.
"""

import logging
from collections.abc import Sequence

import numpy as np

from qkdsim.eavesdrop.strategies import EveContext
from qkdsim.eavesdrop.strategies import EveStrategy
from qkdsim.protocols.records import KeyMaterial
from qkdsim.protocols.records import KeyStage
from qkdsim.protocols.records import TransmissionRecord
from qkdsim.quantum.alphabets import BB84_ALPHABETS
from qkdsim.quantum.alphabets import CIRCULAR
from qkdsim.quantum.alphabets import QuantumAlphabet
from qkdsim.quantum.alphabets import encode
from qkdsim.quantum.alphabets import orthogonal_receiver
from qkdsim.transport.channel import QuantumChannel
from qkdsim.transport.channel import QuantumChannelConfig
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.transport.transcript import Sender
from qkdsim.utils.seeding import SeededRng
from qkdsim.utils.seeding import SessionStreams
from qkdsim.utils.seeding import as_streams

logger = logging.getLogger(__name__)

ALPHABET_MODES: dict[str, tuple[QuantumAlphabet, ...]] = {
    "both": BB84_ALPHABETS,
    "circular-only": (CIRCULAR,),
}


def bb84_alphabets(mode: str) -> tuple[QuantumAlphabet, ...]:
    if mode not in ALPHABET_MODES:
        raise ValueError(
            f"Unknown alphabet mode {mode!r}; expected one of {sorted(ALPHABET_MODES)}"
        )
    return ALPHABET_MODES[mode]


def bb84_stage1(
    n: int,
    channel: QuantumChannelConfig,
    eve: EveStrategy | None,
    rng: SessionStreams | SeededRng,
    alphabet_mode: str = "both",
) -> list[TransmissionRecord]:
    """
    Alice sends n random bits, each in a uniformly chosen alphabet; Bob
    measures each arriving photon in an independently chosen basis.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    alphabets = bb84_alphabets(alphabet_mode)
    streams = as_streams(rng)
    link = QuantumChannel(channel, eve, streams.channel, streams.eve)
    records = []
    for slot in range(n):
        bit = int(streams.alice.integers(2))
        alphabet = alphabets[int(streams.alice.integers(len(alphabets)))]
        basis = alphabets[int(streams.bob.integers(len(alphabets)))]
        delivery = link.send(
            encode(bit, alphabet), EveContext(slot=slot, protocol="bb84")
        )
        outcome = delivery.measure(orthogonal_receiver(basis), streams.bob)
        records.append(
            TransmissionRecord(
                slot=slot,
                alice_bit=bit,
                alice_alphabet=alphabet.name,
                eve_action=delivery.eve_action,
                bob_strategy=basis.name,
                bob_outcome=outcome,
            )
        )
    return records


def sift(
    records: Sequence[TransmissionRecord], transcript: PublicTranscript
) -> tuple[KeyMaterial, KeyMaterial]:
    """Keep the received slots where Bob's basis matched Alice's alphabet."""
    received = [record for record in records if record.received]
    transcript.publish(
        Sender.BOB,
        Phase.SIFT_BASES,
        {
            "slots": [record.slot for record in received],
            "bases": [record.bob_strategy for record in received],
        },
    )
    kept = [record for record in received if record.bases_match and record.conclusive]
    transcript.publish(
        Sender.ALICE, Phase.SIFT_CONFIRM, {"slots": [record.slot for record in kept]}
    )
    return raw_keys(kept)


def raw_keys(
    kept: Sequence[TransmissionRecord],
) -> tuple[KeyMaterial, KeyMaterial]:
    slots = np.array([record.slot for record in kept], dtype=np.int64)
    alice = KeyMaterial([record.alice_bit for record in kept], slots, KeyStage.RAW)
    bob = KeyMaterial([int(record.bob_outcome) for record in kept], slots, KeyStage.RAW)
    return alice, bob


def check_key_pair(alice: KeyMaterial, bob: KeyMaterial) -> None:
    if len(alice) != len(bob):
        raise ValueError(f"Key length mismatch: Alice {len(alice)}, Bob {len(bob)}")
    if not np.array_equal(alice.slots, bob.slots):
        raise ValueError("Alice's and Bob's keys cover different slots")


def opaque_escape_probability(lam: float, m: int) -> float:
    """(1 - lam/4)^m: chance that m compared bits all agree under opaque Eve."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"opaque intensity must be in [0, 1], got {lam!r}")
    return float((1.0 - lam / 4.0) ** m)


def detect_noiseless(
    alice_raw: KeyMaterial,
    bob_raw: KeyMaterial,
    m: int,
    rng: SeededRng,
    transcript: PublicTranscript,
    lam: float = 0.0,
) -> tuple[bool, float, KeyMaterial, KeyMaterial]:
    """
    Compare m publicly chosen raw-key positions.

    Any mismatch means the check is not clean. p_false is the escape
    probability for an opaque Eve of intensity lam; every revealed bit is
    dropped from both remnants.
    """
    check_key_pair(alice_raw, bob_raw)
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    if m > len(alice_raw):
        raise ValueError(f"m={m} exceeds the raw key length {len(alice_raw)}")
    positions = np.sort(rng.choice(len(alice_raw), size=m, replace=False))
    transcript.publish(
        Sender.ALICE,
        Phase.CHECK_POSITIONS,
        {"slots": alice_raw.slots[positions].tolist()},
    )
    transcript.publish(
        Sender.ALICE, Phase.CHECK_BITS, {"bits": alice_raw.bits[positions].tolist()}
    )
    transcript.publish(
        Sender.BOB, Phase.CHECK_BITS, {"bits": bob_raw.bits[positions].tolist()}
    )
    mismatches = int(np.sum(alice_raw.bits[positions] != bob_raw.bits[positions]))
    logger.debug("Noiseless check: %s of %s compared bits differ", mismatches, m)
    p_false = opaque_escape_probability(lam, m)
    return (
        mismatches == 0,
        p_false,
        alice_raw.without(positions, KeyStage.ESTIMATED),
        bob_raw.without(positions, KeyStage.ESTIMATED),
    )
