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
Stage 2 for noisy channels: error estimation, reconciliation and privacy
amplification, shared by BB84, B92 and EPR once each has its raw keys.
"""

import logging
from dataclasses import dataclass

import numpy as np

from qkdsim.eavesdrop.strategies import EveStrategy
from qkdsim.postprocess.amplify import AmplifyConfig
from qkdsim.postprocess.amplify import apply_published_subsets
from qkdsim.postprocess.amplify import predict_final_bits
from qkdsim.postprocess.amplify import privacy_amplify
from qkdsim.postprocess.amplify import published_subsets
from qkdsim.postprocess.reconcile import ReconcileConfig
from qkdsim.postprocess.reconcile import ReconcileStats
from qkdsim.postprocess.reconcile import reconcile
from qkdsim.protocols.bb84 import check_key_pair
from qkdsim.protocols.hooks import SessionHook
from qkdsim.protocols.hooks import notify_stage
from qkdsim.protocols.records import KeyMaterial
from qkdsim.protocols.records import KeyStage
from qkdsim.report_types import SessionAborted
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.transport.transcript import Sender
from qkdsim.utils.seeding import SeededRng

logger = logging.getLogger(__name__)


def estimate_error(
    alice_raw: KeyMaterial,
    bob_raw: KeyMaterial,
    sample_fraction: float,
    r_max: float,
    rng: SeededRng,
    transcript: PublicTranscript,
) -> tuple[float, bool, KeyMaterial, KeyMaterial]:
    """
    Publicly compare a random sample of the raw keys.

    Returns the mismatch fraction R, whether R <= r_max, and both keys with
    the revealed bits removed.
    """
    check_key_pair(alice_raw, bob_raw)
    if not 0.0 < sample_fraction < 1.0:
        raise ValueError(f"sample_fraction must be in (0, 1), got {sample_fraction!r}")
    n = len(alice_raw)
    if n == 0:
        raise ValueError("Cannot estimate the error rate of an empty key")
    size = min(n, max(1, round(sample_fraction * n)))
    positions = np.sort(rng.choice(n, size=size, replace=False))
    transcript.publish(
        Sender.ALICE,
        Phase.ESTIMATE_POSITIONS,
        {"slots": alice_raw.slots[positions].tolist()},
    )
    transcript.publish(
        Sender.ALICE, Phase.ESTIMATE_BITS, {"bits": alice_raw.bits[positions].tolist()}
    )
    transcript.publish(
        Sender.BOB, Phase.ESTIMATE_BITS, {"bits": bob_raw.bits[positions].tolist()}
    )
    error_rate = float(np.mean(alice_raw.bits[positions] != bob_raw.bits[positions]))
    logger.debug("Estimated error rate %.4f on %s bits", error_rate, size)
    return (
        error_rate,
        error_rate <= r_max,
        alice_raw.without(positions, KeyStage.ESTIMATED),
        bob_raw.without(positions, KeyStage.ESTIMATED),
    )


@dataclass
class NoisyOutcome:
    alice_final: KeyMaterial
    bob_final: KeyMaterial
    error_rate: float
    reconcile_stats: ReconcileStats
    reconciled_length: int
    k_estimate: int
    eve_prediction_rate: float | None


def run_noisy_phases(
    alice_raw: KeyMaterial,
    bob_raw: KeyMaterial,
    *,
    sample_fraction: float,
    r_max: float,
    reconcile_cfg: ReconcileConfig,
    amplify_cfg: AmplifyConfig,
    rng: SeededRng,
    transcript: PublicTranscript,
    eve: EveStrategy,
    hooks: list[SessionHook] | None = None,
    stats: dict | None = None,
) -> NoisyOutcome:
    """
    Estimation, reconciliation and amplification in sequence.

    stats, when given, is filled as phases finish so that an abort still
    leaves the partial figures behind.
    """
    hooks = hooks or []
    stats = stats if stats is not None else {}
    if not len(alice_raw):
        raise SessionAborted("empty raw key: no bits survived stage 1")
    error_rate, proceed, alice, bob = estimate_error(
        alice_raw, bob_raw, sample_fraction, r_max, rng, transcript
    )
    stats["raw_error_rate_estimate"] = error_rate
    notify_stage(hooks, KeyStage.ESTIMATED, len(alice), len(bob))
    if not proceed:
        raise SessionAborted(
            f"error-rate estimate {error_rate:.4f} exceeds r_max {r_max:.4f}"
        )

    alice, bob, reconcile_stats = reconcile(
        alice, bob, reconcile_cfg, transcript, rng=rng, error_rate=error_rate
    )
    stats["leaked_parities"] = reconcile_stats.leaked_parities
    stats["reconciled_length"] = len(alice)
    notify_stage(hooks, KeyStage.RECONCILED, len(alice), len(bob))

    k = amplify_cfg.eve_knowledge(min(error_rate, 0.4999), len(alice))
    stats["k_estimate"] = k
    alice_final = privacy_amplify(alice, amplify_cfg, transcript, rng, k=k)
    record = transcript.by_phase(Phase.AMPLIFY_SUBSETS.value)[-1]
    bob_final = apply_published_subsets(bob, record)
    notify_stage(hooks, KeyStage.FINAL, len(alice_final), len(bob_final))

    prediction = predict_final_bits(
        published_subsets(record), eve.ledger.guesses(alice.slots)
    )
    prediction_rate = float(np.mean(prediction == alice_final.bits))
    return NoisyOutcome(
        alice_final=alice_final,
        bob_final=bob_final,
        error_rate=error_rate,
        reconcile_stats=reconcile_stats,
        reconciled_length=len(alice),
        k_estimate=k,
        eve_prediction_rate=prediction_rate,
    )
