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
The one-way quantum channel between Alice and Bob.

Each photon passes a fixed pipeline: the eavesdropper acts first, then the
disturbance (replacement by a random basis state of a random basis among
rectilinear, diagonal and circular), then loss.
"""

import logging
from dataclasses import dataclass

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field

from qkdsim.eavesdrop.strategies import EveContext
from qkdsim.eavesdrop.strategies import EveStrategy
from qkdsim.eavesdrop.strategies import NoEve
from qkdsim.quantum.alphabets import NOISE_BASES
from qkdsim.quantum.alphabets import Outcome
from qkdsim.quantum.alphabets import ReceiverStrategy
from qkdsim.quantum.alphabets import Signal
from qkdsim.quantum.alphabets import receive
from qkdsim.quantum.hilbert import Ket2
from qkdsim.transport.carrier import EntangledCarrier
from qkdsim.transport.carrier import Photon
from qkdsim.utils.seeding import SeededRng

logger = logging.getLogger(__name__)


class QuantumChannelConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    p_flip: float = Field(
        default=0.0,
        ge=0.0,
        le=1.0,
        description="Probability a photon's polarization is replaced by noise",
    )
    p_loss: float = Field(
        default=0.0,
        ge=0.0,
        le=1.0,
        description="Probability a photon never reaches Bob (loss or dark count)",
    )
    rng_seed: int = Field(
        default=0,
        ge=0,
        lt=2**64,
        description="Channel salt mixed into every session's seed sequence",
    )

    @property
    def noiseless(self) -> bool:
        return self.p_flip == 0.0 and self.p_loss == 0.0


@dataclass(frozen=True)
class Delivery:
    photon: Photon | None
    eve_action: str

    @property
    def received(self) -> bool:
        return self.photon is not None

    def measure(self, receiver: ReceiverStrategy, bob_rng: SeededRng) -> Outcome:
        """Bob's detection; an empty slot is a non-reception."""
        if self.photon is None:
            return Signal.NO_RECEPTION
        if isinstance(self.photon, EntangledCarrier):
            return self.photon.measure(receiver, bob_rng)
        return receive(self.photon, receiver, bob_rng)


def disturb(rng: SeededRng) -> Ket2:
    basis = NOISE_BASES[int(rng.integers(len(NOISE_BASES)))]
    return basis[int(rng.integers(2))]


class QuantumChannel:
    """One channel per session; not shared across threads."""

    def __init__(
        self,
        config: QuantumChannelConfig,
        eve: EveStrategy | None,
        rng: SeededRng,
        eve_rng: SeededRng | None = None,
    ) -> None:
        self.config = config
        self.eve = eve if eve is not None else NoEve()
        self.rng = rng
        self.eve_rng = eve_rng if eve_rng is not None else rng

    def send(self, state: Ket2, context: EveContext) -> Delivery:
        photon, eve_action = self.eve.act(state, context, self.eve_rng)
        return Delivery(self.pass_noise(photon), eve_action)

    def pass_noise(self, photon: Photon) -> Photon | None:
        """Disturbance then loss; an entangled carrier hands its probe to Eve first."""
        if self.rng.random() < self.config.p_flip:
            if isinstance(photon, EntangledCarrier):
                photon.release()
            photon = disturb(self.rng)
        if self.rng.random() < self.config.p_loss:
            if isinstance(photon, EntangledCarrier):
                photon.release()
            return None
        return photon


def transmit(
    state: Ket2,
    cfg: QuantumChannelConfig,
    eve: EveStrategy | None,
    rng: SeededRng,
    context: EveContext | None = None,
    eve_rng: SeededRng | None = None,
) -> Photon | None:
    """Send one photon; None means Bob registered nothing in this slot."""
    channel = QuantumChannel(cfg, eve, rng, eve_rng)
    return channel.send(state, context or EveContext()).photon
