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

import base64
import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field

from qkdsim.eavesdrop.ledger import NO_GUESS
from qkdsim.protocols.records import KeyMaterial
from qkdsim.protocols.records import KeyStage
from qkdsim.report_types import SessionAborted
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicRecord
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.transport.transcript import Sender
from qkdsim.utils.seeding import SeededRng

logger = logging.getLogger(__name__)


class AmplifyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    s: int = Field(default=30, ge=1, description="Security parameter")
    k_estimator: Literal["opaque"] = Field(
        default="opaque",
        description="Rule bounding Eve's knowledge from (R, n): opaque gives 2Rn",
    )

    def eve_knowledge(self, error_rate: float, n: int) -> int:
        return estimate_eve_knowledge(error_rate, n)


def estimate_eve_knowledge(error_rate: float, n: int) -> int:
    """
    k = ceil(2 R n) clamped to [0, n].

    Under opaque eavesdropping R = lam/4, and Eve measured half of the lam*n
    sifted bits she touched in the right basis.
    """
    if not 0.0 <= error_rate < 0.5:
        raise ValueError(f"estimate_eve_knowledge needs 0 <= R < 0.5, got {error_rate}")
    if n < 0:
        raise ValueError(f"n cannot be negative, got {n}")
    k = math.ceil(2.0 * error_rate * n - 1e-9)
    return int(min(n, max(0, k)))


def draw_subsets(rows: int, n: int, rng: SeededRng) -> np.ndarray:
    """rows x n membership matrix; every position joins a row with probability 1/2."""
    matrix = rng.random((rows, n)) < 0.5
    empty = ~matrix.any(axis=1)
    while np.any(empty):
        matrix[empty] = rng.random((int(np.sum(empty)), n)) < 0.5
        empty = ~matrix.any(axis=1)
    return matrix


def subset_parities(matrix: np.ndarray, bits: np.ndarray) -> np.ndarray:
    return ((matrix.astype(np.int64) @ bits.astype(np.int64)) % 2).astype(np.uint8)


def encode_subsets(matrix: np.ndarray) -> str:
    return base64.b64encode(np.packbits(matrix, axis=None).tobytes()).decode("ascii")


def published_subsets(record: PublicRecord) -> np.ndarray:
    """Membership matrix from an AMPLIFY_SUBSETS record."""
    if record.phase != Phase.AMPLIFY_SUBSETS:
        raise ValueError(f"Record {record.index} is not an amplification record")
    payload = record.decode()
    rows, n = int(payload["rows"]), int(payload["n"])
    packed = np.frombuffer(base64.b64decode(payload["subsets"]), dtype=np.uint8)
    return np.unpackbits(packed, count=rows * n).reshape(rows, n).astype(bool)


def privacy_amplify(
    key: KeyMaterial,
    cfg: AmplifyConfig,
    transcript: PublicTranscript,
    rng: SeededRng,
    error_rate: float = 0.0,
    k: int | None = None,
) -> KeyMaterial:
    """
    Compress a reconciled key to n - k - s subset parities.

    The subsets are published; their parities never are.
    """
    if key.stage is not KeyStage.RECONCILED:
        raise ValueError(
            f"privacy_amplify needs a reconciled key, got {key.stage.label}"
        )
    n = len(key)
    k = cfg.eve_knowledge(error_rate, n) if k is None else int(k)
    if not 0 <= k <= n:
        raise ValueError(f"k must be in [0, {n}], got {k}")
    rows = n - k - cfg.s
    if rows < 1:
        raise SessionAborted("key exhausted by privacy amplification")
    matrix = draw_subsets(rows, n, rng)
    transcript.publish(
        Sender.ALICE,
        Phase.AMPLIFY_SUBSETS,
        {
            "n": n,
            "rows": rows,
            "slots": key.slots.tolist(),
            "subsets": encode_subsets(matrix),
        },
    )
    logger.debug("Privacy amplification: n=%s k=%s s=%s -> %s bits", n, k, cfg.s, rows)
    return key.advance(
        KeyStage.FINAL, subset_parities(matrix, key.bits), np.arange(rows)
    )


def apply_published_subsets(key: KeyMaterial, record: PublicRecord) -> KeyMaterial:
    """The receiving side of privacy_amplify: same subsets, own key."""
    matrix = published_subsets(record)
    if matrix.shape[1] != len(key):
        raise ValueError(
            f"Published subsets cover {matrix.shape[1]} bits, key has {len(key)}"
        )
    return key.advance(
        KeyStage.FINAL, subset_parities(matrix, key.bits), np.arange(matrix.shape[0])
    )


def predict_final_bits(matrix: np.ndarray, guesses: np.ndarray) -> np.ndarray:
    """Eve's best reading of each final bit: the parity of her guesses."""
    bits = np.where(np.asarray(guesses) == NO_GUESS, 0, guesses)
    return subset_parities(matrix, bits)
