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
One key-distribution session from stage 1 to the final key.

A session owns its RNG streams, transcript and eavesdropper; nothing in it
is shared with other sessions, so sessions can run on any worker.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Literal

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator

from qkdsim.eavesdrop.factory import CARRIER_ONLY_KINDS
from qkdsim.eavesdrop.factory import EveSpec
from qkdsim.eavesdrop.ledger import NO_GUESS
from qkdsim.eavesdrop.strategies import EveStrategy
from qkdsim.postprocess.amplify import AmplifyConfig
from qkdsim.postprocess.reconcile import ReconcileConfig
from qkdsim.protocols.b92 import b92_stage1
from qkdsim.protocols.b92 import erasure_anomaly
from qkdsim.protocols.b92 import erasure_rate
from qkdsim.protocols.b92 import sift_conclusive
from qkdsim.protocols.bb84 import bb84_stage1
from qkdsim.protocols.bb84 import detect_noiseless
from qkdsim.protocols.bb84 import sift
from qkdsim.protocols.epr import EprSource
from qkdsim.protocols.epr import bell_test
from qkdsim.protocols.epr import disclose_rejected
from qkdsim.protocols.epr import epr_split
from qkdsim.protocols.epr import epr_stage1
from qkdsim.protocols.hooks import SessionHook
from qkdsim.protocols.hooks import notify_stage
from qkdsim.protocols.records import KeyMaterial
from qkdsim.protocols.records import KeyStage
from qkdsim.protocols.records import TransmissionRecord
from qkdsim.protocols.records import disagreement_rate
from qkdsim.protocols.stage2 import run_noisy_phases
from qkdsim.report_types import P_FALSE_ASSUMPTION
from qkdsim.report_types import SessionAborted
from qkdsim.report_types import SessionReport
from qkdsim.report_types import create_aborted_report
from qkdsim.report_types import create_completed_report
from qkdsim.transport.channel import QuantumChannelConfig
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.transport.transcript import Sender
from qkdsim.utils.seeding import SessionStreams
from qkdsim.utils.seeding import session_streams

logger = logging.getLogger(__name__)

Protocol = Literal["bb84", "bb84-noisy", "b92", "epr"]


class SessionConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    protocol: Protocol = Field(default="bb84", description="Protocol to run")
    n: int = Field(default=10000, ge=1, description="Slots sent in stage 1")
    alphabet_mode: Literal["both", "circular-only"] = Field(
        default="both", description="BB84 alphabets Alice chooses from"
    )
    theta: float = Field(
        default=math.pi / 8,
        gt=0.0,
        lt=math.pi / 4,
        description="B92 angle, also used to build translucent probes",
    )
    receiver_kind: Literal["projective", "povm"] = Field(
        default="povm", description="B92 receiver"
    )
    m: int = Field(default=200, ge=1, description="Noiseless BB84 check size")
    sample_fraction: float = Field(
        default=0.1, gt=0.0, lt=1.0, description="Raw-key share sacrificed for R"
    )
    r_max: float = Field(
        default=0.12, ge=0.0, le=1.0, description="Abort threshold on R"
    )
    beta_threshold_sigmas: float = Field(
        default=2.0, ge=0.0, description="Bell decision edge in standard errors"
    )
    eve: EveSpec = Field(default_factory=EveSpec)
    channel: QuantumChannelConfig = Field(default_factory=QuantumChannelConfig)
    reconcile: ReconcileConfig = Field(default_factory=ReconcileConfig)
    amplify: AmplifyConfig = Field(default_factory=AmplifyConfig)
    max_attempts: int = Field(
        default=1, ge=1, description="Stage-1 runs before giving up"
    )
    epr_postprocess: bool | None = Field(
        default=None,
        description="Run the noisy phases on EPR raw keys; None means p_flip > 0",
    )

    @model_validator(mode="after")
    def _check_eve(self) -> "SessionConfig":
        if self.protocol == "epr" and self.eve.kind in CARRIER_ONLY_KINDS:
            raise ValueError(f"eve {self.eve.kind!r} is not defined for EPR pairs")
        return self

    @property
    def noisy_epr(self) -> bool:
        if self.epr_postprocess is not None:
            return self.epr_postprocess
        return self.channel.p_flip > 0.0


@dataclass
class SessionRun:
    """Everything one attempt produced, for dumps and tests."""

    report: SessionReport
    records: list[TransmissionRecord] = field(default_factory=list)
    transcript: PublicTranscript | None = None
    eve: EveStrategy | None = None
    alice_key: KeyMaterial | None = None
    bob_key: KeyMaterial | None = None


def stage1_statistics(records: Sequence[TransmissionRecord]) -> dict[str, Any]:
    n_sent = len(records)
    received = [record for record in records if record.received]
    n_received = len(received)
    stats: dict[str, Any] = {
        "n_sent": n_sent,
        "n_received": n_received,
        "reception_rate": n_received / n_sent if n_sent else None,
        "pre_sift_accuracy": None,
    }
    if n_received:
        correct = sum(
            1
            for record in received
            if record.conclusive and int(record.bob_outcome) == record.alice_bit
        )
        stats["pre_sift_accuracy"] = correct / n_received
    return stats


def _raw_statistics(
    alice: KeyMaterial, bob: KeyMaterial, eve: EveStrategy
) -> dict[str, Any]:
    stats: dict[str, Any] = {
        "sifted_length": len(alice),
        "raw_error_rate": disagreement_rate(alice, bob),
        "eve_raw_agreement": None,
    }
    if len(alice):
        guesses = eve.ledger.guesses(alice.slots)
        hits = (guesses != NO_GUESS) & (guesses == alice.bits)
        stats["eve_raw_agreement"] = float(np.mean(hits))
    return stats


def _finish_keys(
    alice: KeyMaterial, bob: KeyMaterial, stats: dict[str, Any]
) -> None:
    stats["final_key_length"] = len(alice)
    stats["keys_match"] = bool(
        len(alice) == len(bob) and np.array_equal(alice.bits, bob.bits)
    )


class _Attempt:
    def __init__(
        self,
        config: SessionConfig,
        seed: int,
        attempt: int,
        hooks: Sequence[SessionHook],
    ) -> None:
        self.config = config
        self.streams: SessionStreams = session_streams(
            seed, config.channel.rng_seed, attempt
        )
        self.eve = config.eve.build(config.theta)
        self.hooks = list(hooks)
        self.transcript = PublicTranscript([self.eve, *self.hooks])
        self.stats: dict[str, Any] = {}
        self.records: list[TransmissionRecord] = []
        self.alice_key: KeyMaterial | None = None
        self.bob_key: KeyMaterial | None = None

    def run(self) -> None:
        protocol = self.config.protocol
        if protocol in ("bb84", "bb84-noisy"):
            self._run_bb84()
        elif protocol == "b92":
            self._run_b92()
        else:
            self._run_epr()

    def _raw(self, alice: KeyMaterial, bob: KeyMaterial) -> None:
        self.stats.update(_raw_statistics(alice, bob, self.eve))
        notify_stage(self.hooks, KeyStage.RAW, len(alice), len(bob))

    def _noisy(self, alice: KeyMaterial, bob: KeyMaterial) -> None:
        config = self.config
        mismatch = not config.eve.knowledge_bound_applies(config.protocol)
        self.stats["k_estimate_model_mismatch"] = mismatch
        if mismatch:
            logger.warning(
                "⚠️ k estimate assumes intercept-resend on BB84; %s Eve on %s "
                "may know more than privacy amplification removes",
                config.eve.label,
                config.protocol,
            )
        outcome = run_noisy_phases(
            alice,
            bob,
            sample_fraction=config.sample_fraction,
            r_max=config.r_max,
            reconcile_cfg=config.reconcile,
            amplify_cfg=config.amplify,
            rng=self.streams.public,
            transcript=self.transcript,
            eve=self.eve,
            hooks=self.hooks,
            stats=self.stats,
        )
        self.stats["eve_prediction_rate"] = outcome.eve_prediction_rate
        self._final(outcome.alice_final, outcome.bob_final)

    def _final(self, alice: KeyMaterial, bob: KeyMaterial) -> None:
        self.alice_key, self.bob_key = alice, bob
        _finish_keys(alice, bob, self.stats)

    def _run_bb84(self) -> None:
        config = self.config
        self.records = bb84_stage1(
            config.n, config.channel, self.eve, self.streams, config.alphabet_mode
        )
        self.stats.update(stage1_statistics(self.records))
        alice, bob = sift(self.records, self.transcript)
        self._raw(alice, bob)
        if config.protocol == "bb84-noisy":
            self._noisy(alice, bob)
            return
        if config.m > len(alice):
            raise SessionAborted(
                f"raw key of {len(alice)} bits is shorter than m={config.m}"
            )
        clean, p_false, alice, bob = detect_noiseless(
            alice,
            bob,
            config.m,
            self.streams.public,
            self.transcript,
            lam=config.eve.opaque_intensity,
        )
        self.stats["p_false"] = p_false
        self.stats["p_false_assumption"] = P_FALSE_ASSUMPTION
        self.stats["eve_detected"] = not clean
        notify_stage(self.hooks, KeyStage.ESTIMATED, len(alice), len(bob))
        if not clean:
            raise SessionAborted("eavesdropper detected: compared raw-key bits differ")
        alice = alice.advance(KeyStage.FINAL)
        bob = bob.advance(KeyStage.FINAL)
        if len(alice):
            guesses = self.eve.ledger.guesses(alice.slots)
            self.stats["eve_prediction_rate"] = float(
                np.mean((guesses != NO_GUESS) & (guesses == alice.bits))
            )
        notify_stage(self.hooks, KeyStage.FINAL, len(alice), len(bob))
        self._final(alice, bob)

    def _run_b92(self) -> None:
        config = self.config
        self.records = b92_stage1(
            config.n,
            config.theta,
            config.receiver_kind,
            config.channel,
            self.eve,
            self.streams,
        )
        self.stats.update(stage1_statistics(self.records))
        rate = erasure_rate(self.records)
        self.stats["erasure_rate"] = rate
        if rate is not None:
            anomaly = erasure_anomaly(
                rate, config.theta, config.receiver_kind, self.stats["n_received"]
            )
            self.stats["erasure_anomaly"] = anomaly.to_dict()
        alice, bob = sift_conclusive(self.records, self.transcript)
        self._raw(alice, bob)
        self._noisy(alice, bob)

    def _run_epr(self) -> None:
        config = self.config
        self.records = epr_stage1(
            config.n, EprSource(), self.eve, self.streams, config.channel
        )
        self.stats.update(stage1_statistics(self.records))
        alice, bob, rejected = epr_split(self.records, self.transcript)
        self._raw(alice, bob)
        disclose_rejected(rejected, self.transcript)
        try:
            result = bell_test(rejected, config.beta_threshold_sigmas)
        except ValueError as exc:
            raise SessionAborted(f"Bell test impossible: {exc}") from exc
        self.stats["bell_beta"] = result.beta
        self.stats["bell_beta_se"] = result.standard_error
        self.stats["bell_deltas"] = result.deltas
        self.stats["eve_detected"] = result.eve_detected
        if result.eve_detected:
            raise SessionAborted(
                f"Bell inequality satisfied (beta={result.beta:.4f}): "
                "eavesdropper detected"
            )
        if config.noisy_epr:
            self._noisy(alice, bob)
            return
        notify_stage(self.hooks, KeyStage.FINAL, len(alice), len(bob))
        self._final(alice.advance(KeyStage.FINAL), bob.advance(KeyStage.FINAL))


def execute_session(
    config: SessionConfig, seed: int, hooks: Sequence[SessionHook] = ()
) -> SessionRun:
    """Run up to max_attempts stage-1 attempts; the last attempt is returned."""
    attempts = 0
    last: _Attempt | None = None
    reason = ""
    for attempt_index in range(config.max_attempts):
        attempts += 1
        current = _Attempt(config, seed, attempt_index, hooks)
        last = current
        try:
            current.run()
        except SessionAborted as exc:
            reason = exc.reason
            current.transcript.publish(Sender.ALICE, Phase.ABORT, {"reason": reason})
            logger.info(
                "Session %s seed=%s attempt %s aborted: %s",
                config.protocol,
                seed,
                attempts,
                reason,
            )
            continue
        report = create_completed_report(
            config.protocol, seed, attempts=attempts, **current.stats
        )
        logger.info(
            "Session %s seed=%s completed: sifted=%s final=%s match=%s",
            config.protocol,
            seed,
            report.sifted_length,
            report.final_key_length,
            report.keys_match,
        )
        return SessionRun(
            report=report,
            records=current.records,
            transcript=current.transcript,
            eve=current.eve,
            alice_key=current.alice_key,
            bob_key=current.bob_key,
        )
    report = create_aborted_report(
        config.protocol, seed, reason, attempts=attempts, **last.stats
    )
    return SessionRun(
        report=report, records=last.records, transcript=last.transcript, eve=last.eve
    )


def run_session(
    config: SessionConfig, seed: int, hooks: Sequence[SessionHook] = ()
) -> SessionReport:
    return execute_session(config, seed, hooks).report
