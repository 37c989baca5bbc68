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
Eavesdropping strategies.

Every strategy sits on the quantum channel before noise and loss, keeps a
ledger of what it learned per slot, and listens passively to the public
channel. Strategies draw only from the eavesdropper's own RNG stream.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from qkdsim.eavesdrop.ledger import EveLedger
from qkdsim.eavesdrop.ledger import LedgerEntry
from qkdsim.quantum.alphabets import BB84_ALPHABETS
from qkdsim.quantum.alphabets import ReceiverStrategy
from qkdsim.quantum.alphabets import Signal
from qkdsim.quantum.alphabets import check_b92_angle
from qkdsim.quantum.alphabets import encode
from qkdsim.quantum.alphabets import epr_alphabet
from qkdsim.quantum.alphabets import orthogonal_receiver
from qkdsim.quantum.alphabets import receive
from qkdsim.quantum.alphabets import theta_alphabet
from qkdsim.quantum.hilbert import BASIS_DIAGONAL
from qkdsim.quantum.hilbert import KET_V
from qkdsim.quantum.hilbert import TOL_SUM
from qkdsim.quantum.hilbert import Ket2
from qkdsim.quantum.hilbert import Ket4
from qkdsim.quantum.hilbert import Operator
from qkdsim.quantum.hilbert import apply_unitary
from qkdsim.quantum.hilbert import factorize
from qkdsim.quantum.hilbert import identity
from qkdsim.quantum.hilbert import linear_ket
from qkdsim.quantum.hilbert import measure_factor
from qkdsim.quantum.hilbert import measure_projective
from qkdsim.quantum.hilbert import tensor
from qkdsim.quantum.hilbert import unitary_extension
from qkdsim.transport.carrier import EntangledCarrier
from qkdsim.transport.carrier import Photon
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicRecord
from qkdsim.transport.transcript import Sender
from qkdsim.utils.seeding import SeededRng

logger = logging.getLogger(__name__)

NO_ACTION = "none"

# Eve reads her probe in the diagonal basis: the first ket leans towards the
# probe state left by |theta>, so it decodes to bit 1.
PROBE_BASIS = BASIS_DIAGONAL
PROBE_BITS = (1, 0)

# Bases an opaque Eve measures in; her guess is certain when one is published.
MEASURED_BASES = frozenset(
    [alphabet.name for alphabet in BB84_ALPHABETS] + ["epr0", "epr1", "epr2"]
)


@dataclass(frozen=True)
class EveContext:
    """What Eve knows about the protocol in use, not about the slot's secrets."""

    slot: int = 0
    protocol: str = "bb84"
    receiver: ReceiverStrategy | None = None


class EveStrategy:
    kind = "none"

    def __init__(self) -> None:
        self.ledger = EveLedger()

    def act(
        self, state: Ket2, context: EveContext, rng: SeededRng
    ) -> tuple[Photon, str]:
        """Interpose on one carrier; returns what travels on and an action summary."""
        return state, NO_ACTION

    def act_pair(
        self, pair: Ket4, context: EveContext, rng: SeededRng
    ) -> tuple[Ket4, str]:
        """Interpose on both photons of an EPR pair before they leave the source."""
        return pair, NO_ACTION

    def after_publish(self, record: PublicRecord) -> None:
        """Read one public-channel record; the default strategy ignores it."""

    def describe(self) -> dict:
        return {"kind": self.kind}


class NoEve(EveStrategy):
    kind = "none"


class OpaqueEve(EveStrategy):
    """Intercept-resend with intensity lam."""

    kind = "opaque"

    def __init__(self, lam: float) -> None:
        super().__init__()
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"opaque intensity must be in [0, 1], got {lam!r}")
        self.lam = float(lam)

    def describe(self) -> dict:
        return {"kind": self.kind, "lambda": self.lam}

    def act(
        self, state: Ket2, context: EveContext, rng: SeededRng
    ) -> tuple[Photon, str]:
        if rng.random() >= self.lam:
            return state, NO_ACTION
        if context.protocol == "b92":
            return self._intercept_b92(state, context, rng)
        if context.protocol == "epr":
            raise ValueError("opaque Eve intercepts EPR pairs through act_pair")
        alphabet = BB84_ALPHABETS[int(rng.integers(len(BB84_ALPHABETS)))]
        bit = receive(state, orthogonal_receiver(alphabet), rng)
        self.ledger.record(
            LedgerEntry(
                slot=context.slot,
                action="intercept",
                basis=alphabet.name,
                guess=int(bit),
                confidence=0.5,
            )
        )
        return encode(bit, alphabet), f"intercept:{alphabet.name}"

    def _intercept_b92(
        self, state: Ket2, context: EveContext, rng: SeededRng
    ) -> tuple[Ket2, str]:
        receiver = context.receiver
        if receiver is None or receiver.theta is None:
            raise ValueError("opaque Eve in a B92 session needs the receiver")
        alphabet = theta_alphabet(receiver.theta)
        outcome = receive(state, receiver, rng)
        if outcome is Signal.ERASURE:
            bit, confidence = int(rng.integers(2)), 0.5
        else:
            bit, confidence = int(outcome), 1.0
        self.ledger.record(
            LedgerEntry(
                slot=context.slot,
                action="intercept",
                basis=receiver.kind.value,
                guess=bit,
                confidence=confidence,
            )
        )
        return encode(bit, alphabet), f"intercept:{receiver.kind.value}"

    def act_pair(
        self, pair: Ket4, context: EveContext, rng: SeededRng
    ) -> tuple[Ket4, str]:
        if rng.random() >= self.lam:
            return pair, NO_ACTION
        index = int(rng.integers(3))
        basis = epr_alphabet(index).basis
        first, _, remainder = measure_factor(pair, basis, 0, rng)
        second, _ = measure_projective(remainder, basis, rng)
        self.ledger.record(
            LedgerEntry(
                slot=context.slot,
                action="intercept",
                basis=f"epr{index}",
                guess=first,
                confidence=0.5,
            )
        )
        return tensor(basis[first], basis[second]), f"intercept:epr{index}"

    def after_publish(self, record: PublicRecord) -> None:
        # Once a basis is public Eve knows which of her guesses are certain.
        if record.phase == Phase.SIFT_BASES and record.sender is Sender.BOB:
            payload = record.decode()
            for slot, basis in zip(payload["slots"], payload["bases"]):
                self._confirm(slot, basis)
        elif record.phase == Phase.EPR_OPERATORS and record.sender is Sender.ALICE:
            payload = record.decode()
            for slot, operator in zip(payload["slots"], payload["operators"]):
                self._confirm(slot, f"epr{operator}")

    def _confirm(self, slot: int, public_basis: str) -> None:
        entry = self.ledger.get(slot)
        if entry is not None and entry.basis in MEASURED_BASES:
            entry.confidence = 1.0 if entry.basis == public_basis else 0.5


class ProbeEve(EveStrategy):
    """Common machinery of the translucent strategies: a unitary on carrier x probe."""

    kind = "probe"

    def __init__(
        self,
        theta: float,
        interaction: Operator,
        probe_states: tuple[Ket2, Ket2],
        probe_init: Ket2 = KET_V,
    ) -> None:
        super().__init__()
        if interaction.dim != 4 or not interaction.is_unitary:
            raise ValueError("probe interaction must be a unitary on dimension 4")
        self.theta = check_b92_angle(theta)
        self.interaction = interaction
        self.probe_init = probe_init
        self.probe_states = probe_states
        self.is_identity = interaction.allclose(identity(4), atol=0.0)

    @property
    def probe_overlap(self) -> float:
        a, b = self.probe_states
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)))

    @property
    def guess_confidence(self) -> float:
        """Helstrom success probability for the two equiprobable probe states."""
        return 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - self.probe_overlap**2)))

    def act(
        self, state: Ket2, context: EveContext, rng: SeededRng
    ) -> tuple[Photon, str]:
        entry = self.ledger.record(
            LedgerEntry(
                slot=context.slot,
                action=self.kind,
                basis="probe-diagonal",
                confidence=self.guess_confidence,
            )
        )
        if self.is_identity:
            index, _ = measure_projective(self.probe_init, PROBE_BASIS, rng)
            entry.guess = PROBE_BITS[index]
            entry.probe = self.probe_init
            return state, NO_ACTION
        joint = apply_unitary(self.interaction, tensor(state, self.probe_init))
        factors = factorize(joint)
        if factors is not None:
            carrier, probe = factors
            index, _ = measure_projective(probe, PROBE_BASIS, rng)
            entry.guess = PROBE_BITS[index]
            entry.probe = probe
            return carrier, self.kind
        carrier = EntangledCarrier(
            slot=context.slot,
            joint=joint,
            probe_basis=PROBE_BASIS,
            eve_rng=rng,
            on_probe_outcome=self._read_probe,
        )
        return carrier, f"{self.kind}:entangled"

    def _read_probe(self, slot: int, index: int) -> None:
        self.ledger.set_guess(slot, PROBE_BITS[index])

    def act_pair(
        self, pair: Ket4, context: EveContext, rng: SeededRng
    ) -> tuple[Ket4, str]:
        raise ValueError(f"{self.kind} eavesdropping acts on single carriers only")


def _probe_pair(phi: float) -> tuple[Ket2, Ket2]:
    """Probe states cos(phi)|V> +/- sin(phi)|H>, overlap cos(2 phi)."""
    return Ket2([math.cos(phi), math.sin(phi)]), Ket2([math.cos(phi), -math.sin(phi)])


class TranslucentEve(ProbeEve):
    """
    Probe coupling that leaves carrier and probe in a product state.

    |theta>|V> -> |theta''>|Psi_theta>, |theta_bar>|V> -> |-theta''>|Psi_theta_bar>
    with probe angle phi = strength * theta and cos(2 theta'') = cos(2 theta) /
    cos(2 phi), the choice that keeps all inner products.
    """

    kind = "translucent"

    def __init__(self, theta: float, strength: float) -> None:
        check_b92_angle(theta)
        if not 0.0 <= strength <= 1.0:
            raise ValueError(
                f"translucent strength must be in [0, 1], got {strength!r}"
            )
        self.strength = float(strength)
        self.probe_angle = self.strength * theta
        ratio = math.cos(2 * theta) / math.cos(2 * self.probe_angle)
        self.carrier_angle = 0.5 * math.acos(min(1.0, ratio))
        probes = _probe_pair(self.probe_angle)
        if self.strength == 0.0:
            interaction = identity(4)
        else:
            alphabet = theta_alphabet(theta)
            inputs = [
                tensor(alphabet.ket_for_1, KET_V),
                tensor(alphabet.ket_for_0, KET_V),
            ]
            outputs = [
                tensor(linear_ket(self.carrier_angle), probes[0]),
                tensor(linear_ket(-self.carrier_angle), probes[1]),
            ]
            interaction = unitary_extension(inputs, outputs)
        super().__init__(theta, interaction, probes)

    def describe(self) -> dict:
        return {"kind": self.kind, "theta": self.theta, "strength": self.strength}

    def bob_conclusive_error(self) -> float:
        """Error rate among conclusive projective B92 results behind this probe."""
        wrong = math.sin(self.theta - self.carrier_angle) ** 2
        right = math.sin(self.theta + self.carrier_angle) ** 2
        return wrong / (wrong + right)


def entangled_coefficients(theta: float, probe_overlap: float) -> tuple[float, float]:
    """
    Real a >= b >= 0 making the entangled probe coupling unitary.

    Solves a^2 + b^2 + 2ab c w = 1 and 2ab + (a^2 + b^2) c w = c with
    c = cos(2 theta) and w the probe overlap.
    """
    check_b92_angle(theta)
    if not -1.0 <= probe_overlap <= 1.0:
        raise ValueError(f"probe overlap must be in [-1, 1], got {probe_overlap!r}")
    c = math.cos(2 * theta)
    w = probe_overlap
    product = c * (1.0 - w) / (2.0 * (1.0 - c * c * w * w))
    squares = 1.0 - 2.0 * product * c * w
    plus = math.sqrt(max(0.0, squares + 2.0 * product))
    minus = math.sqrt(max(0.0, squares - 2.0 * product))
    return (plus + minus) / 2.0, (plus - minus) / 2.0


class EntangledEve(ProbeEve):
    """
    |theta>|V>     -> a|theta>|Psi_theta> + b|theta_bar>|Psi_theta_bar>
    |theta_bar>|V> -> b|theta>|Psi_theta> + a|theta_bar>|Psi_theta_bar>
    """

    kind = "entangled"

    def __init__(
        self, theta: float, a: float, b: float, probe_overlap: float | None = None
    ) -> None:
        check_b92_angle(theta)
        c = math.cos(2 * theta)
        squares, product = a * a + b * b, a * b
        if probe_overlap is None:
            if abs(product) > TOL_SUM:
                probe_overlap = (1.0 - squares) / (2.0 * product * c)
            else:
                probe_overlap = 1.0
        if not -1.0 - TOL_SUM <= probe_overlap <= 1.0 + TOL_SUM:
            raise ValueError(
                f"probe overlap {probe_overlap:.6g} implied by a={a}, b={b} is not "
                "a valid inner product"
            )
        probe_overlap = max(-1.0, min(1.0, probe_overlap))
        norm = squares + 2.0 * product * c * probe_overlap
        if abs(norm - 1.0) > TOL_SUM:
            raise ValueError(
                "Gram condition a^2 + b^2 + 2ab cos(2 theta) "
                "<Psi_theta|Psi_theta_bar> = 1 "
                f"violated: {norm:.6g}"
            )
        cross = 2.0 * product + squares * c * probe_overlap
        if abs(cross - c) > TOL_SUM:
            raise ValueError(
                "Gram condition 2ab + (a^2 + b^2) cos(2 theta) "
                "<Psi_theta|Psi_theta_bar> = cos(2 theta) "
                f"violated: {cross:.6g} vs {c:.6g}"
            )
        self.a, self.b = float(a), float(b)
        probes = _probe_pair(0.5 * math.acos(probe_overlap))
        alphabet = theta_alphabet(theta)
        theta_probe = tensor(alphabet.ket_for_1, probes[0]).amplitudes
        bar_probe = tensor(alphabet.ket_for_0, probes[1]).amplitudes
        inputs = [
            tensor(alphabet.ket_for_1, KET_V),
            tensor(alphabet.ket_for_0, KET_V),
        ]
        outputs = [
            Ket4(a * theta_probe + b * bar_probe, normalize=True),
            Ket4(b * theta_probe + a * bar_probe, normalize=True),
        ]
        trivial = abs(b) <= TOL_SUM and abs(probe_overlap - 1.0) <= TOL_SUM
        if trivial and abs(a - 1.0) <= TOL_SUM:
            interaction = identity(4)
        else:
            interaction = unitary_extension(inputs, outputs)
        super().__init__(theta, interaction, probes)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "theta": self.theta,
            "a": self.a,
            "b": self.b,
            "probe_overlap": self.probe_overlap,
        }


def eve_act(
    state: Ket2, strategy: EveStrategy, context: EveContext, rng: SeededRng
) -> Photon:
    photon, _ = strategy.act(state, context, rng)
    return photon


def build_translucent(theta: float, strength: float) -> TranslucentEve:
    return TranslucentEve(theta, strength)


def build_translucent_entangled(
    theta: float, a: float, b: float, probe_overlap: float | None = None
) -> EntangledEve:
    return EntangledEve(theta, a, b, probe_overlap)
