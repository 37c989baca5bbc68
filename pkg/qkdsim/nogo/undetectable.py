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
An interaction that leaves two non-orthogonal carriers untouched leaves the
probe in the same state for both: U|a>|Psi> = |a>|Psi'> and
U|b>|Psi> = |b>|Psi''> give <a|b> = <a|b> <Psi'|Psi''>, so <Psi'|Psi''> = 1.

Kets here are carrier x probe, matching the eavesdropping strategies.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from qkdsim.eavesdrop.strategies import TranslucentEve
from qkdsim.quantum.alphabets import theta_alphabet
from qkdsim.quantum.hilbert import KET_V
from qkdsim.quantum.hilbert import TOL_ALGEBRA
from qkdsim.quantum.hilbert import Ket2
from qkdsim.quantum.hilbert import Operator
from qkdsim.quantum.hilbert import bracket
from qkdsim.quantum.hilbert import random_unitary
from qkdsim.quantum.hilbert import tensor
from qkdsim.quantum.hilbert import unitary_extension
from qkdsim.utils.seeding import SeededRng

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


class UndetectableStatus(str, Enum):
    UNINFORMED = "undetectable-uninformed"
    INFORMED = "undetectable-informed"
    NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class UndetectableCheck:
    status: UndetectableStatus
    carrier_residual: float
    probe_overlap: complex | None

    @property
    def information_proxy(self) -> float | None:
        if self.probe_overlap is None:
            return None
        return 1.0 - abs(self.probe_overlap)

    @property
    def holds(self) -> bool:
        """False only for a counterexample: undetectable yet informative."""
        return self.status is not UndetectableStatus.INFORMED


def _probe_part(output: np.ndarray, carrier: Ket2) -> tuple[np.ndarray, float]:
    """(<carrier| x 1) output and the weight left outside carrier x anything."""
    probe = carrier.amplitudes.conj() @ output.reshape(2, 2)
    return probe, max(0.0, 1.0 - float(np.vdot(probe, probe).real))


def undetectable_implies_uninformed(
    unitary: Operator,
    a: Ket2,
    b: Ket2,
    tol: float = DEFAULT_TOL,
    probe_init: Ket2 = KET_V,
) -> UndetectableCheck:
    if unitary.dim != 4 or not unitary.is_unitary:
        raise ValueError("undetectable_implies_uninformed needs a unitary on dim 4")
    overlap_ab = bracket(a, b)
    if abs(overlap_ab) <= TOL_ALGEBRA:
        raise ValueError("carriers a and b must not be orthogonal")
    probe_a, residual_a = _probe_part(
        unitary.entries @ tensor(a, probe_init).amplitudes, a
    )
    probe_b, residual_b = _probe_part(
        unitary.entries @ tensor(b, probe_init).amplitudes, b
    )
    residual = max(residual_a, residual_b)
    if residual > tol:
        return UndetectableCheck(UndetectableStatus.NOT_APPLICABLE, residual, None)
    probe_overlap = complex(np.vdot(probe_a, probe_b))
    allowed = max(tol, 4.0 * math.sqrt(residual) / abs(overlap_ab))
    status = (
        UndetectableStatus.UNINFORMED
        if abs(probe_overlap - 1.0) <= allowed
        else UndetectableStatus.INFORMED
    )
    if status is UndetectableStatus.INFORMED:
        logger.error("Undetectable interaction with probe overlap %s", probe_overlap)
    return UndetectableCheck(status, residual, probe_overlap)


def random_carrier_preserving_unitary(
    a: Ket2, b: Ket2, rng: SeededRng, probe_init: Ket2 = KET_V
) -> Operator:
    """
    A random U leaving both carriers intact.

    The probe turns into W|probe_init> for a random W; the rest of U is a
    random completion.
    """
    if abs(bracket(a, b)) <= TOL_ALGEBRA:
        raise ValueError("carriers a and b must not be orthogonal")
    probe = Ket2(random_unitary(2, rng) @ probe_init.amplitudes, normalize=True)
    inputs = [tensor(a, probe_init), tensor(b, probe_init)]
    outputs = [tensor(a, probe), tensor(b, probe)]
    return unitary_extension(inputs, outputs, rng)


SWEEP_COLUMNS = [
    "strength",
    "carrier_residual",
    "probe_overlap",
    "information_proxy",
    "bob_error",
]


def translucent_sweep(theta: float, strengths: Sequence[float]) -> pd.DataFrame:
    """Detectability and information along the translucent family."""
    alphabet = theta_alphabet(theta)
    rows = []
    for strength in strengths:
        eve = TranslucentEve(theta, strength)
        check = undetectable_implies_uninformed(
            eve.interaction, alphabet.ket_for_1, alphabet.ket_for_0, tol=DEFAULT_TOL
        )
        rows.append(
            {
                "strength": float(strength),
                "carrier_residual": check.carrier_residual,
                "probe_overlap": eve.probe_overlap,
                "information_proxy": 1.0 - eve.probe_overlap,
                "bob_error": eve.bob_conclusive_error(),
            }
        )
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
