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

import numpy as np
import pytest

from qkdsim.eavesdrop.strategies import NoEve
from qkdsim.eavesdrop.strategies import OpaqueEve
from qkdsim.protocols.bb84 import bb84_alphabets
from qkdsim.protocols.bb84 import bb84_stage1
from qkdsim.protocols.bb84 import detect_noiseless
from qkdsim.protocols.bb84 import opaque_escape_probability
from qkdsim.protocols.bb84 import sift
from qkdsim.protocols.records import KeyMaterial
from qkdsim.protocols.records import KeyStage
from qkdsim.protocols.records import RECORD_COLUMNS
from qkdsim.protocols.records import TransmissionRecord
from qkdsim.protocols.records import check_records
from qkdsim.protocols.records import disagreement_rate
from qkdsim.protocols.records import dump_records_csv
from qkdsim.protocols.records import records_frame
from qkdsim.transport.channel import QuantumChannelConfig
from qkdsim.transport.transcript import Phase
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.utils.seeding import make_rng
from qkdsim.utils.seeding import session_streams

NOISELESS = QuantumChannelConfig()


def _sifted(n, eve=None, seed=0, mode="both"):
    records = bb84_stage1(n, NOISELESS, eve, session_streams(seed), mode)
    transcript = PublicTranscript([eve] if eve is not None else [])
    alice, bob = sift(records, transcript)
    return records, transcript, alice, bob


def test_matched_bases_always_agree_without_eve():
    records = bb84_stage1(20000, NOISELESS, None, session_streams(1))
    matched = [record for record in records if record.bases_match]
    assert all(record.bob_outcome == record.alice_bit for record in matched)
    agree = np.mean([record.bob_outcome == record.alice_bit for record in records])
    assert agree == pytest.approx(0.75, abs=0.01)


def test_sift_keeps_matched_slots_and_publishes_bases():
    records, transcript, alice, bob = _sifted(4000, seed=2)
    matched = [record.slot for record in records if record.bases_match]
    assert alice.slots.tolist() == matched
    assert np.array_equal(alice.bits, bob.bits)
    assert alice.stage is KeyStage.RAW
    assert transcript.count(Phase.SIFT_BASES.value) == 1
    assert transcript.count(Phase.SIFT_CONFIRM.value) == 1
    assert len(alice) / 4000 == pytest.approx(0.5, abs=0.03)


def test_full_intercept_resend_gives_quarter_error():
    _, _, alice, bob = _sifted(20000, OpaqueEve(1.0), seed=3)
    assert disagreement_rate(alice, bob) == pytest.approx(0.25, abs=0.02)


def test_partial_intercept_scales_error():
    _, _, alice, bob = _sifted(20000, OpaqueEve(0.4), seed=4)
    assert disagreement_rate(alice, bob) == pytest.approx(0.1, abs=0.015)


def test_circular_only_keeps_every_slot():
    _, _, alice, bob = _sifted(2000, seed=5, mode="circular-only")
    assert len(alice) == 2000
    assert disagreement_rate(alice, bob) == 0.0


def test_circular_only_still_reveals_intercept_resend():
    _, _, alice, bob = _sifted(20000, OpaqueEve(1.0), seed=6, mode="circular-only")
    assert disagreement_rate(alice, bob) == pytest.approx(0.25, abs=0.02)


def test_unknown_alphabet_mode_is_rejected():
    with pytest.raises(ValueError, match="Unknown alphabet mode"):
        bb84_alphabets("diagonal")


def test_idle_eavesdropper_leaves_records_unchanged():
    quiet = bb84_stage1(3000, NOISELESS, NoEve(), session_streams(7))
    idle = bb84_stage1(3000, NOISELESS, OpaqueEve(0.0), session_streams(7))
    assert quiet == idle


def test_same_seed_same_records():
    first = bb84_stage1(500, NOISELESS, OpaqueEve(0.5), session_streams(8))
    second = bb84_stage1(500, NOISELESS, OpaqueEve(0.5), session_streams(8))
    assert first == second


def test_detect_noiseless_on_clean_keys():
    _, transcript, alice, bob = _sifted(2000, seed=9)
    clean, p_false, alice_rest, bob_rest = detect_noiseless(
        alice, bob, 100, make_rng(0), transcript, lam=1.0
    )
    assert clean
    assert p_false == pytest.approx(0.75**100)
    assert len(alice_rest) == len(alice) - 100
    assert alice_rest.stage is KeyStage.ESTIMATED
    assert np.array_equal(alice_rest.slots, bob_rest.slots)
    assert transcript.count(Phase.CHECK_BITS.value) == 2


def test_detect_noiseless_catches_full_intercept():
    _, transcript, alice, bob = _sifted(4000, OpaqueEve(1.0), seed=10)
    clean, _, _, _ = detect_noiseless(alice, bob, 100, make_rng(1), transcript)
    assert not clean


def test_detect_noiseless_validates_sample_size():
    _, transcript, alice, bob = _sifted(200, seed=11)
    with pytest.raises(ValueError, match="exceeds the raw key length"):
        detect_noiseless(alice, bob, len(alice) + 1, make_rng(0), transcript)
    with pytest.raises(ValueError, match="at least 1"):
        detect_noiseless(alice, bob, 0, make_rng(0), transcript)


def test_escape_probability():
    assert opaque_escape_probability(1.0, 20) == pytest.approx(0.75**20)
    assert opaque_escape_probability(0.0, 20) == 1.0
    with pytest.raises(ValueError):
        opaque_escape_probability(1.2, 20)


def test_records_frame_and_csv(tmp_path):
    records = bb84_stage1(50, QuantumChannelConfig(p_loss=0.5), None, make_rng(12))
    frame = records_frame(records)
    assert list(frame.columns) == RECORD_COLUMNS
    assert "non-reception" in set(frame["bob_outcome"])
    path = dump_records_csv(records, tmp_path / "records.csv")
    assert path.read_text(encoding="utf-8").startswith("slot,alice_bit")


def test_records_must_be_in_slot_order():
    record = TransmissionRecord(
        slot=3,
        alice_bit=1,
        alice_alphabet="rectilinear",
        eve_action="none",
        bob_strategy="rectilinear",
        bob_outcome=1,
    )
    with pytest.raises(ValueError, match="strictly increasing"):
        check_records([record, record])


def test_key_material_only_moves_forward():
    key = KeyMaterial([1, 0, 1], [2, 5, 7], KeyStage.RECONCILED)
    with pytest.raises(ValueError, match="cannot move"):
        key.advance(KeyStage.RAW)
    with pytest.raises(ValueError, match="cannot grow"):
        key.advance(KeyStage.FINAL, bits=np.zeros(4), slots=np.arange(4))
    assert key.without([1]).bitstring() == "11"
    with pytest.raises(ValueError, match="0 or 1"):
        KeyMaterial([2], [0])
