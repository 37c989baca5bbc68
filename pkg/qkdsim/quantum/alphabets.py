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
Quantum alphabets (bit <-> ket encodings) and the receiver strategies Bob
uses to read them.
"""

import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum

from qkdsim.quantum.hilbert import BASIS_CIRCULAR
from qkdsim.quantum.hilbert import BASIS_DIAGONAL
from qkdsim.quantum.hilbert import BASIS_RECTILINEAR
from qkdsim.quantum.hilbert import KET_H
from qkdsim.quantum.hilbert import KET_LEFT
from qkdsim.quantum.hilbert import KET_RIGHT
from qkdsim.quantum.hilbert import KET_V
from qkdsim.quantum.hilbert import TOL_ALGEBRA
from qkdsim.quantum.hilbert import Ket2
from qkdsim.quantum.hilbert import Operator
from qkdsim.quantum.hilbert import OrthonormalBasis
from qkdsim.quantum.hilbert import Povm
from qkdsim.quantum.hilbert import bracket
from qkdsim.quantum.hilbert import identity
from qkdsim.quantum.hilbert import linear_ket
from qkdsim.quantum.hilbert import measure_povm
from qkdsim.quantum.hilbert import measure_projective
from qkdsim.quantum.hilbert import orthogonal_complement
from qkdsim.quantum.hilbert import projector
from qkdsim.utils.seeding import SeededRng

logger = logging.getLogger(__name__)

LABEL_THETA = "θ"
LABEL_THETA_BAR = "θ̄"
LABEL_INCONCLUSIVE = "?"

EPR_OPERATOR_COUNT = 3
EPR_ANGLE_STEP = math.pi / 6


class Signal(str, Enum):
    """Receiver outcomes that carry no bit."""

    ERASURE = "erasure"
    NO_RECEPTION = "non-reception"


Outcome = int | Signal


def is_bit(outcome: Outcome) -> bool:
    return not isinstance(outcome, Signal)


def outcome_label(outcome: Outcome) -> str:
    return outcome.value if isinstance(outcome, Signal) else str(int(outcome))


@dataclass(frozen=True)
class QuantumAlphabet:
    name: str
    ket_for_1: Ket2
    ket_for_0: Ket2

    @property
    def orthogonal(self) -> bool:
        return abs(bracket(self.ket_for_0, self.ket_for_1)) < TOL_ALGEBRA

    @functools.cached_property
    def basis(self) -> OrthonormalBasis:
        """Measurement basis ordered by bit value (index == decoded bit)."""
        if not self.orthogonal:
            raise ValueError(f"Alphabet {self.name} is not orthogonal")
        return OrthonormalBasis((self.ket_for_0, self.ket_for_1))


def encode(bit: int, alphabet: QuantumAlphabet) -> Ket2:
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return alphabet.ket_for_1 if bit else alphabet.ket_for_0


RECTILINEAR = QuantumAlphabet("rectilinear", ket_for_1=KET_V, ket_for_0=KET_H)
CIRCULAR = QuantumAlphabet("circular", ket_for_1=KET_RIGHT, ket_for_0=KET_LEFT)

# Bases the channel's disturbance draws from.
NOISE_BASES = (BASIS_RECTILINEAR, BASIS_DIAGONAL, BASIS_CIRCULAR)

BB84_ALPHABETS = (RECTILINEAR, CIRCULAR)
ALPHABETS_BY_NAME = {alphabet.name: alphabet for alphabet in BB84_ALPHABETS}


def check_b92_angle(theta: float) -> float:
    if not 0.0 < theta < math.pi / 4:
        raise ValueError(f"B92 angle must satisfy 0 < theta < pi/4, got {theta!r}")
    return float(theta)


@functools.lru_cache(maxsize=64)
def theta_alphabet(theta: float) -> QuantumAlphabet:
    """A_theta: |theta> for 1 and |theta_bar> = |-theta> for 0."""
    check_b92_angle(theta)
    return QuantumAlphabet(
        "theta", ket_for_1=linear_ket(theta), ket_for_0=linear_ket(-theta)
    )


def epr_angle(index: int) -> float:
    if index not in range(EPR_OPERATOR_COUNT):
        raise ValueError(f"EPR operator index must be 0, 1 or 2, got {index!r}")
    return index * EPR_ANGLE_STEP


@functools.lru_cache(maxsize=8)
def epr_alphabet(index: int) -> QuantumAlphabet:
    """A_i: |i*pi/6> for 0 and |i*pi/6 + pi/2> for 1."""
    angle = epr_angle(index)
    return QuantumAlphabet(
        f"epr{index}",
        ket_for_1=linear_ket(angle + math.pi / 2),
        ket_for_0=linear_ket(angle),
    )


def not_projector(ket: Ket2) -> Operator:
    """P_not(k) = 1 - |k><k|"""
    return identity(2) - projector(ket)


@functools.lru_cache(maxsize=64)
def build_b92_povm(theta: float) -> Povm:
    """
    Unambiguous discrimination of |theta> and |theta_bar>.

    Each label names the state its outcome identifies, so the element under
    "θ" is P_not(theta_bar) / (1 + <theta|theta_bar>) and vice versa.
    """
    alphabet = theta_alphabet(theta)
    overlap = abs(bracket(alphabet.ket_for_1, alphabet.ket_for_0))
    identifies_theta = not_projector(alphabet.ket_for_0) * (1.0 / (1.0 + overlap))
    identifies_theta_bar = not_projector(alphabet.ket_for_1) * (1.0 / (1.0 + overlap))
    inconclusive = identity(2) - identifies_theta - identifies_theta_bar
    return Povm(
        labels=(LABEL_THETA, LABEL_THETA_BAR, LABEL_INCONCLUSIVE),
        elements=(identifies_theta, identifies_theta_bar, inconclusive),
    )


POVM_LABEL_BITS: dict[str, Outcome] = {
    LABEL_THETA: 1,
    LABEL_THETA_BAR: 0,
    LABEL_INCONCLUSIVE: Signal.ERASURE,
}


class ReceiverKind(str, Enum):
    ORTHOGONAL_BASIS = "orthogonal-basis"
    B92_PROJECTIVE = "b92-projective"
    B92_POVM = "b92-povm"
    EPR_OPERATOR = "epr-operator"


@dataclass(frozen=True)
class ReceiverStrategy:
    kind: ReceiverKind
    alphabet: QuantumAlphabet | None = None
    theta: float | None = None
    index: int | None = None

    def __post_init__(self):
        if self.kind is ReceiverKind.ORTHOGONAL_BASIS:
            if self.alphabet is None or not self.alphabet.orthogonal:
                raise ValueError("orthogonal-basis receiver needs an orthogonal basis")
        elif self.kind in (ReceiverKind.B92_PROJECTIVE, ReceiverKind.B92_POVM):
            if self.theta is None:
                raise ValueError(f"{self.kind.value} receiver needs theta")
            check_b92_angle(self.theta)
        elif self.kind is ReceiverKind.EPR_OPERATOR:
            epr_angle(self.index if self.index is not None else -1)

    @property
    def name(self) -> str:
        if self.kind is ReceiverKind.ORTHOGONAL_BASIS:
            return f"{self.kind.value}:{self.alphabet.name}"
        if self.kind is ReceiverKind.EPR_OPERATOR:
            return f"{self.kind.value}:{self.index}"
        return self.kind.value


def orthogonal_receiver(alphabet: QuantumAlphabet) -> ReceiverStrategy:
    return ReceiverStrategy(ReceiverKind.ORTHOGONAL_BASIS, alphabet=alphabet)


B92_RECEIVER_KINDS = {
    "projective": ReceiverKind.B92_PROJECTIVE,
    "povm": ReceiverKind.B92_POVM,
    ReceiverKind.B92_PROJECTIVE.value: ReceiverKind.B92_PROJECTIVE,
    ReceiverKind.B92_POVM.value: ReceiverKind.B92_POVM,
}


def b92_receiver(theta: float, kind: str) -> ReceiverStrategy:
    """kind is "projective" or "povm" (the "b92-" prefixed forms also work)."""
    key = kind.value if isinstance(kind, ReceiverKind) else kind
    if key not in B92_RECEIVER_KINDS:
        raise ValueError(f"Not a B92 receiver kind: {kind!r}")
    return ReceiverStrategy(B92_RECEIVER_KINDS[key], theta=theta)


def epr_receiver(index: int) -> ReceiverStrategy:
    return ReceiverStrategy(
        ReceiverKind.EPR_OPERATOR, alphabet=epr_alphabet(index), index=index
    )


def receiver_effects(
    strategy: ReceiverStrategy, rng: SeededRng
) -> list[tuple[Outcome, Operator]]:
    """
    The effects Bob's next measurement applies, each tagged with its outcome.

    Used when the arriving photon is entangled with another system and the
    outcome must be sampled jointly. For the projective B92 receiver this
    draws the P_not(theta) / P_not(theta_bar) choice from rng.
    """
    kind = strategy.kind
    if kind in (ReceiverKind.ORTHOGONAL_BASIS, ReceiverKind.EPR_OPERATOR):
        basis = strategy.alphabet.basis
        return [(bit, projector(ket)) for bit, ket in enumerate(basis)]
    if kind is ReceiverKind.B92_PROJECTIVE:
        basis, yes_bit = _b92_projective_choice(strategy.theta, rng)
        return [(yes_bit, projector(basis[0])), (Signal.ERASURE, projector(basis[1]))]
    povm = build_b92_povm(strategy.theta)
    return [(POVM_LABEL_BITS[label], e) for label, e in zip(povm.labels, povm.elements)]


def _b92_projective_choice(
    theta: float, rng: SeededRng
) -> tuple[OrthonormalBasis, int]:
    alphabet = theta_alphabet(theta)
    if int(rng.integers(2)) == 0:
        # "yes" on P_not(theta) certifies theta_bar
        excluded, yes_bit = alphabet.ket_for_1, 0
    else:
        excluded, yes_bit = alphabet.ket_for_0, 1
    basis = OrthonormalBasis((orthogonal_complement(excluded), excluded))
    return basis, yes_bit


def receive(state: Ket2, strategy: ReceiverStrategy, rng: SeededRng) -> Outcome:
    """Measure an arriving photon and decode it to a bit or an erasure."""
    kind = strategy.kind
    if kind in (ReceiverKind.ORTHOGONAL_BASIS, ReceiverKind.EPR_OPERATOR):
        index, _ = measure_projective(state, strategy.alphabet.basis, rng)
        return index
    if kind is ReceiverKind.B92_PROJECTIVE:
        basis, yes_bit = _b92_projective_choice(strategy.theta, rng)
        index, _ = measure_projective(state, basis, rng)
        return yes_bit if index == 0 else Signal.ERASURE
    label = measure_povm(state, build_b92_povm(strategy.theta), rng)
    return POVM_LABEL_BITS[label]
