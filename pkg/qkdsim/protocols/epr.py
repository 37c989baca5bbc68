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
The EPR protocol.

A neutral source emits one of three antisymmetric pairs per slot. Alice and
Bob each measure with one of three operators M_0, M_1, M_2 (linear
polarization at 0, pi/6 and 2 pi/6); Bob records the complement of his bit.
Equal-operator slots form the raw key, the rest feed the Bell test.
"""

import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field

import numpy as np

from qkdsim.eavesdrop.strategies import EveContext
from qkdsim.eavesdrop.strategies import EveStrategy
from qkdsim.eavesdrop.strategies import NoEve
from qkdsim.protocols.records import KeyMaterial
from qkdsim.protocols.records import KeyStage
from qkdsim.protocols.records import TransmissionRecord
from qkdsim.quantum.alphabets import EPR_OPERATOR_COUNT
from qkdsim.quantum.alphabets import Signal
from qkdsim.quantum.alphabets import epr_alphabet
from qkdsim.quantum.alphabets import epr_angle
from qkdsim.quantum.alphabets import epr_receiver
from qkdsim.quantum.alphabets import is_bit
from qkdsim.quantum.alphabets import receive
from qkdsim.quantum.hilbert import TOL_ALGEBRA
from qkdsim.quantum.hilbert import Ket4
from qkdsim.quantum.hilbert import bracket
from qkdsim.quantum.hilbert import linear_ket
from qkdsim.quantum.hilbert import measure_factor
from qkdsim.quantum.hilbert import tensor
from qkdsim.transport.channel import QuantumChannel
from qkdsim.transport.channel import QuantumChannelConfig
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.transport.transcript import Sender
from qkdsim.utils.seeding import SeededRng
from qkdsim.utils.seeding import SessionStreams
from qkdsim.utils.seeding import as_streams

logger = logging.getLogger(__name__)

OPERATOR_PAIRS = ((0, 1), (0, 2), (1, 2))


def antisymmetric_pair(angle: float) -> Ket4:
    """(|x>|x + pi/2> - |x + pi/2>|x>) / sqrt(2) for x = angle."""
    first = linear_ket(angle)
    second = linear_ket(angle + math.pi / 2)
    amplitudes = (
        tensor(first, second).amplitudes - tensor(second, first).amplitudes
    ) / math.sqrt(2.0)
    return Ket4(amplitudes)


def is_swap_antisymmetric(state: Ket4, tol: float = TOL_ALGEBRA) -> bool:
    matrix = state.amplitudes.reshape(2, 2)
    return bool(np.allclose(matrix.T, -matrix, atol=tol, rtol=0.0))


def _default_states() -> tuple[Ket4, ...]:
    return tuple(antisymmetric_pair(epr_angle(j)) for j in range(EPR_OPERATOR_COUNT))


@dataclass(frozen=True)
class EprSource:
    states: tuple[Ket4, ...] = field(default_factory=_default_states)

    def __post_init__(self):
        if not self.states:
            raise ValueError("EprSource needs at least one state")
        for index, state in enumerate(self.states):
            if state.dim != 4:
                raise ValueError(f"EPR state {index} is not a dimension-4 ket")
            if abs(state.norm - 1.0) > TOL_ALGEBRA:
                raise ValueError(f"EPR state {index} has norm {state.norm!r}")
            if not is_swap_antisymmetric(state):
                raise ValueError(f"EPR state {index} is not antisymmetric under swap")

    def emit(self, rng: SeededRng) -> tuple[int, Ket4]:
        index = int(rng.integers(len(self.states)))
        return index, self.states[index]


def epr_joint_distribution(omega: Ket4, i: int, j: int) -> np.ndarray:
    """
    Exact P[alice_bit, bob_recorded_bit] when Alice measures M_i and Bob M_j.

    Bob's recorded bit is the complement of his measured index.
    """
    alice_basis = epr_alphabet(i).basis
    bob_basis = epr_alphabet(j).basis
    table = np.zeros((2, 2))
    for a, b in itertools.product(range(2), range(2)):
        projection = tensor(alice_basis[a], bob_basis[1 - b])
        table[a, b] = abs(bracket(projection, omega)) ** 2
    return table


def epr_stage1(
    n: int,
    source: EprSource,
    eve: EveStrategy | None,
    rng: SessionStreams | SeededRng,
    channel: QuantumChannelConfig | None = None,
) -> list[TransmissionRecord]:
    """
    Per slot: the source picks a pair, Eve may act on both photons, Alice
    measures her photon, and Bob's photon crosses the channel's noise and loss
    before Bob measures it.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    streams = as_streams(rng)
    eve = eve if eve is not None else NoEve()
    link = QuantumChannel(channel or QuantumChannelConfig(), eve, streams.channel)
    records = []
    for slot in range(n):
        state_index, pair = source.emit(streams.source)
        context = EveContext(slot=slot, protocol="epr")
        pair, action = eve.act_pair(pair, context, streams.eve)
        alice_op = int(streams.alice.integers(EPR_OPERATOR_COUNT))
        bob_op = int(streams.bob.integers(EPR_OPERATOR_COUNT))
        alice_bit, _, remainder = measure_factor(
            pair, epr_alphabet(alice_op).basis, 0, streams.alice
        )
        photon = link.pass_noise(remainder)
        if photon is None:
            outcome = Signal.NO_RECEPTION
        else:
            outcome = 1 - receive(photon, epr_receiver(bob_op), streams.bob)
        records.append(
            TransmissionRecord(
                slot=slot,
                alice_bit=alice_bit,
                alice_alphabet=f"epr{alice_op}",
                eve_action=action,
                bob_strategy=f"epr{bob_op}",
                bob_outcome=outcome,
                source_state=state_index,
            )
        )
    return records


def _operator_index(name: str) -> int:
    return int(name.removeprefix("epr"))


@dataclass(frozen=True)
class RejectedKey:
    """Slots where Alice and Bob used different operators."""

    slots: np.ndarray
    alice_ops: np.ndarray
    bob_ops: np.ndarray
    alice_bits: np.ndarray
    bob_bits: np.ndarray

    def __len__(self) -> int:
        return int(self.slots.size)

    def pair_counts(self) -> dict[tuple[int, int], int]:
        counts = {}
        for i, j in OPERATOR_PAIRS:
            counts[(i, j)] = int(np.sum(self._pair_mask(i, j)))
        return counts

    def _pair_mask(self, i: int, j: int) -> np.ndarray:
        forward = (self.alice_ops == i) & (self.bob_ops == j)
        backward = (self.alice_ops == j) & (self.bob_ops == i)
        return forward | backward

    def differ_rate(self, i: int, j: int) -> tuple[float, int]:
        """P(bits differ | operators {i, j}) pooled over both orders."""
        mask = self._pair_mask(i, j)
        count = int(np.sum(mask))
        if count == 0:
            raise ValueError(f"No rejected-key samples for operator pair ({i}, {j})")
        differ = np.sum(self.alice_bits[mask] != self.bob_bits[mask])
        return float(differ) / count, count


def epr_split(
    records: Sequence[TransmissionRecord], transcript: PublicTranscript
) -> tuple[KeyMaterial, KeyMaterial, RejectedKey]:
    """Both announce their operators for the received slots, then split."""
    received = [
        record for record in records if record.received and is_bit(record.bob_outcome)
    ]
    slots = [record.slot for record in received]
    alice_ops = [_operator_index(record.alice_alphabet) for record in received]
    bob_ops = [_operator_index(record.bob_strategy) for record in received]
    transcript.publish(
        Sender.BOB, Phase.EPR_OPERATORS, {"slots": slots, "operators": bob_ops}
    )
    transcript.publish(
        Sender.ALICE, Phase.EPR_OPERATORS, {"slots": slots, "operators": alice_ops}
    )
    raw = [record for record in received if record.bases_match]
    rejected = [record for record in received if not record.bases_match]
    raw_slots = np.array([record.slot for record in raw], dtype=np.int64)
    alice_raw = KeyMaterial([r.alice_bit for r in raw], raw_slots, KeyStage.RAW)
    bob_raw = KeyMaterial([int(r.bob_outcome) for r in raw], raw_slots, KeyStage.RAW)
    rejected_key = RejectedKey(
        slots=np.array([r.slot for r in rejected], dtype=np.int64),
        alice_ops=np.array([_operator_index(r.alice_alphabet) for r in rejected]),
        bob_ops=np.array([_operator_index(r.bob_strategy) for r in rejected]),
        alice_bits=np.array([r.alice_bit for r in rejected], dtype=np.uint8),
        bob_bits=np.array([int(r.bob_outcome) for r in rejected], dtype=np.uint8),
    )
    return alice_raw, bob_raw, rejected_key


def disclose_rejected(rejected: RejectedKey, transcript: PublicTranscript) -> None:
    slots = rejected.slots.tolist()
    transcript.publish(
        Sender.ALICE,
        Phase.BELL_DISCLOSURE,
        {"slots": slots, "bits": rejected.alice_bits.tolist()},
    )
    transcript.publish(
        Sender.BOB,
        Phase.BELL_DISCLOSURE,
        {"slots": slots, "bits": rejected.bob_bits.tolist()},
    )


@dataclass(frozen=True)
class BellResult:
    beta: float
    standard_error: float
    deltas: dict[str, float]
    counts: dict[str, int]
    eve_detected: bool


def bell_beta(deltas: dict[tuple[int, int], float]) -> float:
    """beta = 1 + D(1,2) - |D(0,1) - D(0,2)|; local hidden variables give beta >= 0."""
    return 1.0 + deltas[(1, 2)] - abs(deltas[(0, 1)] - deltas[(0, 2)])


def bell_test(rejected: RejectedKey, threshold_sigmas: float = 2.0) -> BellResult:
    """
    Estimate beta from the rejected key.

    D(i, j) = P(differ) - P(agree) pooled over (i, j) and (j, i). Eve is
    declared present when beta >= -threshold_sigmas * SE(beta).
    """
    if threshold_sigmas < 0:
        raise ValueError(f"threshold_sigmas must be >= 0, got {threshold_sigmas!r}")
    deltas = {}
    variance = 0.0
    counts = {}
    for i, j in OPERATOR_PAIRS:
        p_differ, count = rejected.differ_rate(i, j)
        deltas[(i, j)] = 2.0 * p_differ - 1.0
        variance += 4.0 * p_differ * (1.0 - p_differ) / count
        counts[f"{i},{j}"] = count
    beta = bell_beta(deltas)
    standard_error = math.sqrt(variance)
    detected = beta >= -threshold_sigmas * standard_error
    logger.debug(
        "Bell test: beta=%.4f se=%.4f detected=%s", beta, standard_error, detected
    )
    return BellResult(
        beta=beta,
        standard_error=standard_error,
        deltas={f"{i},{j}": value for (i, j), value in deltas.items()},
        counts=counts,
        eve_detected=detected,
    )
