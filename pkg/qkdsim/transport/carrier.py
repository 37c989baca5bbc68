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
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from qkdsim.quantum.alphabets import Outcome
from qkdsim.quantum.alphabets import ReceiverStrategy
from qkdsim.quantum.alphabets import receiver_effects
from qkdsim.quantum.hilbert import Ket2
from qkdsim.quantum.hilbert import Ket4
from qkdsim.quantum.hilbert import OrthonormalBasis
from qkdsim.quantum.hilbert import factor_outcome_weights
from qkdsim.quantum.hilbert import measure_factor
from qkdsim.quantum.hilbert import sample_index
from qkdsim.utils.seeding import SeededRng

logger = logging.getLogger(__name__)

# Called with (slot, probe outcome index) once Eve's probe is read.
ProbeCallback = Callable[[int, int], None]


@dataclass
class EntangledCarrier:
    """
    A photon still entangled with Eve's probe.

    joint is carrier (factor 0) tensor probe (factor 1). The probe is read
    exactly once: jointly with Bob's measurement, or from its marginal when
    the carrier is lost or overwritten by channel noise.
    """

    slot: int
    joint: Ket4
    probe_basis: OrthonormalBasis
    eve_rng: SeededRng
    on_probe_outcome: ProbeCallback
    consumed: bool = False

    def _finish(self, probe_index: int) -> None:
        self.consumed = True
        self.on_probe_outcome(self.slot, probe_index)

    def release(self) -> None:
        """The carrier left the joint state without reaching Bob intact."""
        if self.consumed:
            raise ValueError(f"Carrier in slot {self.slot} was already measured")
        index, _, _ = measure_factor(self.joint, self.probe_basis, 1, self.eve_rng)
        self._finish(index)

    def measure(self, strategy: ReceiverStrategy, bob_rng: SeededRng) -> Outcome:
        """
        Bob measures the carrier factor with his receiver.

        Bob's outcome is drawn from its marginal with Bob's stream, Eve's probe
        outcome from the matching conditional with Eve's stream.
        """
        if self.consumed:
            raise ValueError(f"Carrier in slot {self.slot} was already measured")
        effects = receiver_effects(strategy, bob_rng)
        # conditional carrier states given each probe outcome
        carrier_parts = factor_outcome_weights(self.joint, self.probe_basis, 1)
        joint = np.array(
            [
                [
                    float(np.vdot(part, element.entries @ part).real)
                    for part in carrier_parts
                ]
                for _, element in effects
            ]
        )
        joint = np.clip(joint, 0.0, None)
        marginal = joint.sum(axis=1)
        k = sample_index(marginal / marginal.sum(), bob_rng)
        conditional = joint[k] / joint[k].sum()
        self._finish(sample_index(conditional, self.eve_rng))
        return effects[k][0]


Photon = Ket2 | EntangledCarrier
