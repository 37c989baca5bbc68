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
from collections import Counter

import pytest

from qkdsim.quantum.alphabets import CIRCULAR
from qkdsim.quantum.alphabets import LABEL_INCONCLUSIVE
from qkdsim.quantum.alphabets import LABEL_THETA
from qkdsim.quantum.alphabets import LABEL_THETA_BAR
from qkdsim.quantum.alphabets import RECTILINEAR
from qkdsim.quantum.alphabets import Signal
from qkdsim.quantum.alphabets import b92_receiver
from qkdsim.quantum.alphabets import build_b92_povm
from qkdsim.quantum.alphabets import encode
from qkdsim.quantum.alphabets import epr_alphabet
from qkdsim.quantum.alphabets import orthogonal_receiver
from qkdsim.quantum.alphabets import receive
from qkdsim.quantum.alphabets import theta_alphabet
from qkdsim.quantum.hilbert import KET_H
from qkdsim.quantum.hilbert import KET_RIGHT
from qkdsim.quantum.hilbert import KET_V
from qkdsim.quantum.hilbert import measure_povm
from qkdsim.quantum.hilbert import povm_probabilities
from qkdsim.utils.seeding import make_rng

THETA = math.pi / 8


def test_bb84_alphabets_are_orthogonal():
    assert RECTILINEAR.orthogonal
    assert CIRCULAR.orthogonal
    assert encode(1, RECTILINEAR) == KET_V
    assert encode(0, RECTILINEAR) == KET_H
    assert encode(1, CIRCULAR) == KET_RIGHT


def test_encode_rejects_non_bits():
    with pytest.raises(ValueError):
        encode(2, RECTILINEAR)


@pytest.mark.parametrize("theta", [0.0, math.pi / 4, -0.1])
def test_theta_alphabet_range(theta):
    with pytest.raises(ValueError, match="B92 angle"):
        theta_alphabet(theta)


def test_theta_alphabet_is_not_orthogonal():
    alphabet = theta_alphabet(THETA)
    assert not alphabet.orthogonal
    with pytest.raises(ValueError, match="not orthogonal"):
        alphabet.basis


def test_matching_basis_decodes_exactly():
    rng = make_rng(0)
    for alphabet in (RECTILINEAR, CIRCULAR):
        receiver = orthogonal_receiver(alphabet)
        for bit in (0, 1):
            state = encode(bit, alphabet)
            outcomes = {receive(state, receiver, rng) for _ in range(50)}
            assert outcomes == {bit}


def test_mismatched_basis_is_a_coin_flip():
    rng = make_rng(1)
    receiver = orthogonal_receiver(CIRCULAR)
    ones = sum(receive(KET_V, receiver, rng) for _ in range(10000))
    assert ones / 10000 == pytest.approx(0.5, abs=0.02)


def test_b92_povm_probabilities():
    povm = build_b92_povm(THETA)
    alphabet = theta_alphabet(THETA)
    probabilities = dict(
        zip(povm.labels, povm_probabilities(alphabet.ket_for_1, povm))
    )
    assert probabilities[LABEL_THETA] == pytest.approx(1 - math.cos(2 * THETA))
    assert probabilities[LABEL_THETA_BAR] == pytest.approx(0.0, abs=1e-12)
    assert probabilities[LABEL_INCONCLUSIVE] == pytest.approx(math.cos(2 * THETA))


def test_b92_povm_never_misidentifies():
    rng = make_rng(2)
    povm = build_b92_povm(THETA)
    alphabet = theta_alphabet(THETA)
    labels = Counter(measure_povm(alphabet.ket_for_0, povm, rng) for _ in range(5000))
    assert labels[LABEL_THETA] == 0
    assert labels[LABEL_INCONCLUSIVE] / 5000 == pytest.approx(
        math.cos(2 * THETA), abs=0.03
    )


def test_b92_projective_receiver_rates():
    rng = make_rng(3)
    receiver = b92_receiver(THETA, "projective")
    alphabet = theta_alphabet(THETA)
    outcomes = Counter()
    for index in range(20000):
        bit = index % 2
        outcome = receive(encode(bit, alphabet), receiver, rng)
        outcomes["erasure" if outcome is Signal.ERASURE else outcome == bit] += 1
    assert outcomes[False] == 0
    assert outcomes["erasure"] / 20000 == pytest.approx(0.75, abs=0.015)


def test_b92_receiver_kind_validation():
    with pytest.raises(ValueError, match="B92 receiver kind"):
        b92_receiver(THETA, "heterodyne")


def test_epr_alphabets():
    for index in range(3):
        alphabet = epr_alphabet(index)
        assert alphabet.orthogonal
        assert alphabet.name == f"epr{index}"
    with pytest.raises(ValueError):
        epr_alphabet(3)
