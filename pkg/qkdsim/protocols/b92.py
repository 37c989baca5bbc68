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
import math
from collections.abc import Sequence
from dataclasses import asdict
from dataclasses import dataclass

from qkdsim.eavesdrop.strategies import EveContext
from qkdsim.eavesdrop.strategies import EveStrategy
from qkdsim.protocols.bb84 import raw_keys
from qkdsim.protocols.records import KeyMaterial
from qkdsim.protocols.records import TransmissionRecord
from qkdsim.quantum.alphabets import ReceiverKind
from qkdsim.quantum.alphabets import b92_receiver
from qkdsim.quantum.alphabets import check_b92_angle
from qkdsim.quantum.alphabets import encode
from qkdsim.quantum.alphabets import theta_alphabet
from qkdsim.transport.channel import QuantumChannel
from qkdsim.transport.channel import QuantumChannelConfig
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.transport.transcript import Sender
from qkdsim.utils.seeding import SeededRng
from qkdsim.utils.seeding import SessionStreams
from qkdsim.utils.seeding import as_streams

logger = logging.getLogger(__name__)

ANOMALY_Z_LIMIT = 3.0


def b92_stage1(
    n: int,
    theta: float,
    receiver_kind: str,
    channel: QuantumChannelConfig,
    eve: EveStrategy | None,
    rng: SessionStreams | SeededRng,
) -> list[TransmissionRecord]:
    """Alice sends random bits in the alphabet {|theta>, |theta_bar>}."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    check_b92_angle(theta)
    alphabet = theta_alphabet(theta)
    receiver = b92_receiver(theta, receiver_kind)
    streams = as_streams(rng)
    link = QuantumChannel(channel, eve, streams.channel, streams.eve)
    records = []
    for slot in range(n):
        bit = int(streams.alice.integers(2))
        context = EveContext(slot=slot, protocol="b92", receiver=receiver)
        delivery = link.send(encode(bit, alphabet), context)
        records.append(
            TransmissionRecord(
                slot=slot,
                alice_bit=bit,
                alice_alphabet=alphabet.name,
                eve_action=delivery.eve_action,
                bob_strategy=receiver.name,
                bob_outcome=delivery.measure(receiver, streams.bob),
            )
        )
    return records


def sift_conclusive(
    records: Sequence[TransmissionRecord], transcript: PublicTranscript
) -> tuple[KeyMaterial, KeyMaterial]:
    """Bob names the slots where he got a non-erasure; both keep exactly those."""
    kept = [record for record in records if record.conclusive]
    transcript.publish(
        Sender.BOB, Phase.CONCLUSIVE_SLOTS, {"slots": [record.slot for record in kept]}
    )
    return raw_keys(kept)


def erasure_rate(records: Sequence[TransmissionRecord]) -> float | None:
    received = [record for record in records if record.received]
    if not received:
        return None
    erased = sum(1 for record in received if not record.conclusive)
    return erased / len(received)


def expected_erasure_rate(theta: float, receiver_kind: str) -> float:
    """(1 + cos^2 2theta) / 2 for the projective receiver, cos 2theta for the POVM."""
    overlap = math.cos(2 * check_b92_angle(theta))
    kind = b92_receiver(theta, receiver_kind).kind
    if kind is ReceiverKind.B92_PROJECTIVE:
        return (1.0 + overlap**2) / 2.0
    return overlap


@dataclass(frozen=True)
class ErasureAnomaly:
    expected: float
    observed: float
    z: float
    flagged: bool

    def to_dict(self) -> dict:
        return asdict(self)


def erasure_anomaly(
    observed: float, theta: float, receiver_kind: str, n: int
) -> ErasureAnomaly:
    """
    Compare the observed erasure rate over n received slots with the
    eavesdropper-free expectation; |z| above ANOMALY_Z_LIMIT is flagged.
    """
    if n < 1:
        raise ValueError("erasure_anomaly needs at least one received slot")
    if not 0.0 <= observed <= 1.0:
        raise ValueError(f"erasure rate must be in [0, 1], got {observed!r}")
    expected = expected_erasure_rate(theta, receiver_kind)
    sigma = math.sqrt(expected * (1.0 - expected) / n)
    z = (observed - expected) / sigma
    return ErasureAnomaly(
        expected=expected,
        observed=observed,
        z=z,
        flagged=abs(z) > ANOMALY_Z_LIMIT,
    )
