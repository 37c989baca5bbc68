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
No-cloning, checked two ways.

A replicator U with U|Psi>|u> = |Psi'>|u>|u> and U|Psi>|v> = |Psi''>|v>|v>
must keep inner products, so <u|v> = <Psi'|Psi''> <u|v>^2. For
0 < |<u|v>| < 1 that asks for a probe overlap of modulus 1/|<u|v>| > 1.

The randomized side works on carrier x blank (dimension 4): a copier sends
|x>|V> to |x>|x>, and the residual of U on x is 2 - 2 |<xx|U|xV>|.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from qkdsim.quantum.hilbert import KET_V
from qkdsim.quantum.hilbert import TOL_SUM
from qkdsim.quantum.hilbert import Ket2
from qkdsim.quantum.hilbert import Operator
from qkdsim.quantum.hilbert import bracket
from qkdsim.quantum.hilbert import orthogonal_complement
from qkdsim.quantum.hilbert import random_ket
from qkdsim.quantum.hilbert import random_unitary
from qkdsim.quantum.hilbert import tensor
from qkdsim.utils.seeding import SeededRng

logger = logging.getLogger(__name__)


class CloningVerdict(str, Enum):
    INFEASIBLE = "infeasible"
    FEASIBLE_TRIVIALLY = "feasible-trivially"


@dataclass(frozen=True)
class CloningInstance:
    u: Ket2
    v: Ket2

    def __post_init__(self):
        if self.u.dim != 2 or self.v.dim != 2:
            raise ValueError("CloningInstance needs two dimension-2 kets")

    @property
    def overlap(self) -> complex:
        return bracket(self.u, self.v)


@dataclass(frozen=True)
class CloningCheck:
    verdict: CloningVerdict
    overlap: complex
    required_probe_overlap: complex | None

    @property
    def witness(self) -> float | None:
        """|omega|, which must not exceed 1 for a physical probe."""
        if self.required_probe_overlap is None:
            return None
        return abs(self.required_probe_overlap)


def cloning_feasibility(inst: CloningInstance, tol: float = TOL_SUM) -> CloningCheck:
    overlap = inst.overlap
    magnitude = abs(overlap)
    if magnitude <= tol:
        # orthogonal states put no constraint on the probe
        return CloningCheck(CloningVerdict.FEASIBLE_TRIVIALLY, overlap, None)
    required = 1.0 / overlap
    if magnitude >= 1.0 - tol:
        return CloningCheck(CloningVerdict.FEASIBLE_TRIVIALLY, overlap, required)
    return CloningCheck(CloningVerdict.INFEASIBLE, overlap, required)


def cloning_residual(unitary: Operator | np.ndarray, state: Ket2) -> float:
    """Squared distance of U|x>|V> from the nearest phase of |x>|x>."""
    matrix = unitary.entries if isinstance(unitary, Operator) else np.asarray(unitary)
    output = matrix @ tensor(state, KET_V).amplitudes
    target = tensor(state, state).amplitudes
    return float(2.0 - 2.0 * min(1.0, abs(np.vdot(target, output))))


def pair_residual(unitary: Operator | np.ndarray, u: Ket2, v: Ket2) -> float:
    """How badly U copies the worse of the two states."""
    return max(cloning_residual(unitary, u), cloning_residual(unitary, v))


def cloning_deviation_bound(overlap: float) -> float:
    """
    Lower bound on pair_residual for any U and any pair with |<u|v>| = overlap.

    U keeps the angle arccos(c) between the two inputs while the targets sit
    arccos(c^2) apart, so one output is at least half the gap from its target.
    """
    c = abs(overlap)
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"overlap magnitude must be in [0, 1], got {overlap!r}")
    gap = math.acos(min(1.0, c * c)) - math.acos(min(1.0, c))
    return 2.0 - 2.0 * math.cos(max(0.0, gap) / 2.0)


def pair_with_overlap(overlap: float, rng: SeededRng) -> tuple[Ket2, Ket2]:
    """A random pair with |<u|v>| = overlap."""
    if not 0.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must be in [0, 1], got {overlap!r}")
    u = random_ket(2, rng)
    phase = np.exp(2j * np.pi * rng.random())
    amplitudes = (
        overlap * u.amplitudes
        + math.sqrt(1.0 - overlap**2) * phase * orthogonal_complement(u).amplitudes
    )
    return Ket2(u.amplitudes), Ket2(amplitudes, normalize=True)


def random_nonorthogonal_pair(
    rng: SeededRng, margin: float = 1e-3
) -> tuple[Ket2, Ket2]:
    while True:
        u, v = Ket2(random_ket(2, rng).amplitudes), Ket2(random_ket(2, rng).amplitudes)
        if margin < abs(bracket(u, v)) < 1.0 - margin:
            return u, v


@dataclass(frozen=True)
class CloningSearchResult:
    trials: int
    min_residual: float
    min_margin: float
    overlap: float | None

    @property
    def bound(self) -> float | None:
        if self.overlap is None:
            return None
        return cloning_deviation_bound(self.overlap)

    @property
    def respects_bound(self) -> bool:
        return self.min_margin >= -TOL_SUM


def cloning_search(
    trials: int, rng: SeededRng, overlap: float | None = None
) -> CloningSearchResult:
    """
    Random unitaries against random non-orthogonal pairs.

    min_margin is the smallest residual - bound seen; a negative value would
    be a copier beating the no-cloning bound.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    min_residual = math.inf
    min_margin = math.inf
    for _ in range(trials):
        unitary = random_unitary(4, rng)
        if overlap is None:
            u, v = random_nonorthogonal_pair(rng)
        else:
            u, v = pair_with_overlap(overlap, rng)
        residual = pair_residual(unitary, u, v)
        bound = cloning_deviation_bound(abs(bracket(u, v)))
        min_residual = min(min_residual, residual)
        min_margin = min(min_margin, residual - bound)
    if min_margin < -TOL_SUM:
        logger.error("Sampled copier beats the no-cloning bound by %.3g", -min_margin)
    return CloningSearchResult(
        trials=trials,
        min_residual=min_residual,
        min_margin=min_margin,
        overlap=overlap,
    )


def orthogonal_copier() -> Operator:
    """CNOT with the carrier as control: copies |V> and |H>."""
    return Operator(
        [
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 0, 1],
            [0, 0, 1, 0],
        ]
    )
