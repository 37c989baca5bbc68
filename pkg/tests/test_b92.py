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

import math

import numpy as np
import pytest

from qkdsim.eavesdrop.strategies import OpaqueEve
from qkdsim.protocols.b92 import b92_stage1
from qkdsim.protocols.b92 import erasure_anomaly
from qkdsim.protocols.b92 import erasure_rate
from qkdsim.protocols.b92 import expected_erasure_rate
from qkdsim.protocols.b92 import sift_conclusive
from qkdsim.protocols.records import disagreement_rate
from qkdsim.transport.channel import QuantumChannelConfig
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.utils.seeding import session_streams

THETA = math.pi / 8
NOISELESS = QuantumChannelConfig()


@pytest.mark.parametrize("receiver_kind", ["projective", "povm"])
def test_conclusive_results_are_never_wrong_without_eve(receiver_kind):
    records = b92_stage1(
        20000, THETA, receiver_kind, NOISELESS, None, session_streams(1)
    )
    alice, bob = sift_conclusive(records, PublicTranscript())
    assert len(alice) > 0
    assert disagreement_rate(alice, bob) == 0.0
    expected = expected_erasure_rate(THETA, receiver_kind)
    assert erasure_rate(records) == pytest.approx(expected, abs=0.015)


def test_expected_erasure_rates():
    assert expected_erasure_rate(THETA, "projective") == pytest.approx(0.75)
    assert expected_erasure_rate(THETA, "povm") == pytest.approx(math.sqrt(0.5))
    assert expected_erasure_rate(THETA, "b92-povm") == pytest.approx(math.sqrt(0.5))


def test_povm_beats_projective_receiver():
    for theta in np.linspace(0.05, math.pi / 4 - 0.05, 7):
        assert expected_erasure_rate(theta, "povm") < expected_erasure_rate(
            theta, "projective"
        )


def test_sift_publishes_only_slot_indices():
    records = b92_stage1(300, THETA, "povm", NOISELESS, None, session_streams(2))
    transcript = PublicTranscript()
    alice, _ = sift_conclusive(records, transcript)
    (record,) = transcript.records
    assert record.phase == Phase.CONCLUSIVE_SLOTS.value
    assert record.decode() == {"slots": alice.slots.tolist()}


def test_erasure_rate_without_reception():
    records = b92_stage1(
        50,
        THETA,
        "projective",
        QuantumChannelConfig(p_loss=1.0),
        None,
        session_streams(3),
    )
    assert erasure_rate(records) is None


def test_intercept_resend_shows_up_as_errors():
    records = b92_stage1(
        20000, THETA, "povm", NOISELESS, OpaqueEve(1.0), session_streams(4)
    )
    alice, bob = sift_conclusive(records, PublicTranscript())
    assert disagreement_rate(alice, bob) > 0.2


def test_erasure_anomaly_flags_large_deviation():
    expected = expected_erasure_rate(THETA, "povm")
    calm = erasure_anomaly(expected, THETA, "povm", 10000)
    assert calm.z == pytest.approx(0.0)
    assert not calm.flagged
    assert erasure_anomaly(0.9, THETA, "povm", 10000).flagged
    assert set(calm.to_dict()) == {"expected", "observed", "z", "flagged"}


def test_erasure_anomaly_validates_inputs():
    with pytest.raises(ValueError, match="at least one"):
        erasure_anomaly(0.5, THETA, "povm", 0)
    with pytest.raises(ValueError, match="erasure rate"):
        erasure_anomaly(1.5, THETA, "povm", 10)


def test_receiver_kind_and_angle_are_validated():
    with pytest.raises(ValueError, match="Not a B92 receiver kind"):
        b92_stage1(10, THETA, "heterodyne", NOISELESS, None, session_streams(5))
    with pytest.raises(ValueError):
        b92_stage1(10, math.pi / 2, "povm", NOISELESS, None, session_streams(5))
