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

from qkdsim.cli.selftest import bracket_mismatches
from qkdsim.cli.selftest import bracket_table
from qkdsim.quantum.hilbert import BASIS_CIRCULAR
from qkdsim.quantum.hilbert import BASIS_DIAGONAL
from qkdsim.quantum.hilbert import BASIS_RECTILINEAR
from qkdsim.quantum.hilbert import KET_ANTI
from qkdsim.quantum.hilbert import KET_DIAG
from qkdsim.quantum.hilbert import KET_H
from qkdsim.quantum.hilbert import KET_LEFT
from qkdsim.quantum.hilbert import KET_RIGHT
from qkdsim.quantum.hilbert import KET_V
from qkdsim.quantum.hilbert import Ket2
from qkdsim.quantum.hilbert import Ket4
from qkdsim.quantum.hilbert import Operator
from qkdsim.quantum.hilbert import OrthonormalBasis
from qkdsim.quantum.hilbert import Povm
from qkdsim.quantum.hilbert import apply_unitary
from qkdsim.quantum.hilbert import basis_change_unitary
from qkdsim.quantum.hilbert import bracket
from qkdsim.quantum.hilbert import commutator
from qkdsim.quantum.hilbert import coordinates
from qkdsim.quantum.hilbert import equal_up_to_phase
from qkdsim.quantum.hilbert import expectation
from qkdsim.quantum.hilbert import factorize
from qkdsim.quantum.hilbert import identity
from qkdsim.quantum.hilbert import linear_ket
from qkdsim.quantum.hilbert import measure_factor
from qkdsim.quantum.hilbert import measure_projective
from qkdsim.quantum.hilbert import projective_probabilities
from qkdsim.quantum.hilbert import projector
from qkdsim.quantum.hilbert import random_hermitian
from qkdsim.quantum.hilbert import random_ket
from qkdsim.quantum.hilbert import tensor
from qkdsim.quantum.hilbert import uncertainty_product
from qkdsim.quantum.hilbert import unitary_extension
from qkdsim.utils.seeding import make_rng

R = 1.0 / math.sqrt(2.0)


def test_ket_requires_unit_norm():
    with pytest.raises(ValueError, match="unit norm"):
        Ket2([1.0, 1.0])
    assert Ket2([3.0, 4.0], normalize=True) == Ket2([0.6, 0.8])


def test_ket_rejects_unsupported_dimension():
    with pytest.raises(ValueError):
        Ket2([1.0, 0.0, 0.0])


def test_bracket_examples():
    assert bracket(KET_V, KET_H) == 0
    assert bracket(KET_V, KET_DIAG) == pytest.approx(R)
    assert bracket(KET_H, KET_RIGHT) == pytest.approx(-1j * R)
    assert bracket(KET_DIAG, KET_LEFT) == pytest.approx((1 + 1j) / 2)
    assert bracket(KET_RIGHT, KET_DIAG) == pytest.approx((1 + 1j) / 2)


def test_bracket_is_conjugate_symmetric():
    rng = make_rng(3)
    for _ in range(20):
        a, b = random_ket(2, rng), random_ket(2, rng)
        assert bracket(a, b) == pytest.approx(bracket(b, a).conjugate(), abs=1e-12)


def test_bracket_dimension_mismatch():
    with pytest.raises(ValueError, match="Dimension mismatch"):
        bracket(KET_V, tensor(KET_V, KET_H))


def test_bracket_table_matches_printed_values():
    assert bracket_mismatches() == []
    table = bracket_table()
    assert np.allclose(table, table.conj().T, atol=1e-12)
    assert np.allclose(np.diag(table), 1.0, atol=1e-12)


def test_kets_equal_up_to_phase():
    assert equal_up_to_phase(KET_V, Ket2([1j, 0.0]))
    assert not equal_up_to_phase(KET_V, KET_DIAG)


def test_projective_measurement_in_own_basis_is_certain():
    rng = make_rng(0)
    for _ in range(50):
        index, post = measure_projective(KET_H, BASIS_RECTILINEAR, rng)
        assert index == 1
        assert post == KET_H


def test_projective_probabilities_diagonal_on_vertical():
    probabilities = projective_probabilities(KET_V, BASIS_DIAGONAL)
    assert probabilities == pytest.approx([0.5, 0.5])


def test_measurement_frequencies_follow_born_rule():
    rng = make_rng(7)
    state = linear_ket(math.pi / 8)
    hits = sum(
        measure_projective(state, BASIS_RECTILINEAR, rng)[0] == 0 for _ in range(20000)
    )
    assert hits / 20000 == pytest.approx(math.cos(math.pi / 8) ** 2, abs=0.015)


def test_orthonormal_basis_validation():
    with pytest.raises(ValueError, match="not orthonormal"):
        OrthonormalBasis((KET_V, KET_DIAG))
    with pytest.raises(ValueError, match="incomplete"):
        OrthonormalBasis((KET_V,))


def test_povm_must_sum_to_identity():
    with pytest.raises(ValueError, match="identity"):
        Povm(("a", "b"), (projector(KET_V), projector(KET_DIAG)))
    povm = Povm(("v", "h"), (projector(KET_V), projector(KET_H)))
    assert povm.element("h").allclose(projector(KET_H))


def test_operator_flags():
    assert identity(2).is_unitary
    assert projector(KET_DIAG).is_hermitian
    assert not Operator([[0, 1], [0, 0]]).is_hermitian


def test_expectation_rejects_non_hermitian():
    with pytest.raises(ValueError, match="hermitian"):
        expectation(Operator([[0, 1], [0, 0]]), KET_V)


def test_uncertainty_relation_holds_for_random_triples():
    rng = make_rng(5)
    for _ in range(500):
        a, b = random_hermitian(2, rng), random_hermitian(2, rng)
        lhs, rhs = uncertainty_product(a, b, random_ket(2, rng))
        assert lhs >= rhs - 1e-10


def test_uncertainty_for_pauli_pair_is_tight():
    sigma_x = Operator([[0, 1], [1, 0]])
    sigma_y = Operator([[0, -1j], [1j, 0]])
    lhs, rhs = uncertainty_product(sigma_x, sigma_y, KET_V)
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(1.0)


def test_tensor_and_factorize_roundtrip():
    state = tensor(KET_DIAG, KET_RIGHT)
    factors = factorize(state)
    assert factors is not None
    assert equal_up_to_phase(factors[0], KET_DIAG)
    assert equal_up_to_phase(factors[1], KET_RIGHT)


def test_factorize_detects_entanglement():
    singlet = (tensor(KET_V, KET_H).amplitudes - tensor(KET_H, KET_V).amplitudes) * R
    assert factorize(Ket4(singlet)) is None


def test_measure_factor_collapses_partner():
    singlet = Ket4(
        (tensor(KET_V, KET_H).amplitudes - tensor(KET_H, KET_V).amplitudes) * R
    )
    rng = make_rng(9)
    for _ in range(20):
        index, collapsed, remainder = measure_factor(singlet, BASIS_DIAGONAL, 0, rng)
        partner = KET_ANTI if index == 0 else KET_DIAG
        assert equal_up_to_phase(remainder, partner)
        assert factorize(collapsed) is not None


def test_unitary_extension_maps_inputs():
    rng = make_rng(1)
    inputs = [KET_V, KET_DIAG]
    rotation = Operator([[0, -1j], [1j, 0]]) @ Operator([[R, R], [R, -R]])
    outputs = [apply_unitary(rotation, ket) for ket in inputs]
    u = unitary_extension(inputs, outputs, rng)
    assert u.is_unitary
    for source, target in zip(inputs, outputs):
        assert apply_unitary(u, source) == target


def test_unitary_extension_names_violated_gram_entry():
    with pytest.raises(ValueError, match="Gram condition"):
        unitary_extension([KET_V, KET_DIAG], [KET_V, KET_H])


ALPHABETS = {
    "rectilinear": (KET_V, KET_H),
    "diagonal": (KET_DIAG, KET_ANTI),
    "circular": (KET_RIGHT, KET_LEFT),
}


def test_commutator_of_vertical_and_diagonal_projectors():
    c = commutator(projector(KET_V), projector(KET_DIAG))
    assert c.allclose(Operator([[0, 0.5], [-0.5, 0]]))
    assert c.frobenius_norm() == pytest.approx(R, abs=1e-12)
    assert commutator(projector(KET_V), projector(KET_V)).frobenius_norm() == 0.0


@pytest.mark.parametrize(
    "first, second",
    [
        ("rectilinear", "diagonal"),
        ("rectilinear", "circular"),
        ("diagonal", "circular"),
    ],
)
def test_projectors_of_different_alphabets_do_not_commute(first, second):
    for a in ALPHABETS[first]:
        for b in ALPHABETS[second]:
            norm = commutator(projector(a), projector(b)).frobenius_norm()
            assert norm == pytest.approx(R, abs=1e-12)


@pytest.mark.parametrize("name", sorted(ALPHABETS))
def test_projectors_of_one_alphabet_commute(name):
    first, second = ALPHABETS[name]
    c = commutator(projector(first), projector(second))
    assert c.allclose(Operator(np.zeros((2, 2))))


def test_commutator_is_antisymmetric_and_antihermitian():
    rng = make_rng(11)
    for _ in range(50):
        a, b = random_hermitian(2, rng), random_hermitian(2, rng)
        ab, ba = commutator(a, b), commutator(b, a)
        assert ab.allclose(-ba)
        assert ab.dagger.allclose(-ab)


def test_commutator_dimension_mismatch():
    with pytest.raises(ValueError, match="Dimension mismatch"):
        commutator(identity(2), identity(4))


@pytest.mark.parametrize(
    "observable, state, expected",
    [
        (projector(KET_V), KET_V, 1.0),
        (projector(KET_V), KET_H, 0.0),
        (projector(KET_V), KET_RIGHT, 0.5),
        (projector(KET_DIAG), KET_V, 0.5),
        (identity(2), KET_LEFT, 1.0),
        (0.5 * (projector(KET_V) - projector(KET_H)), KET_V, 0.5),
        (0.5 * (projector(KET_V) - projector(KET_H)), KET_H, -0.5),
        (0.5 * (projector(KET_V) - projector(KET_H)), KET_DIAG, 0.0),
    ],
)
def test_expectation_examples(observable, state, expected):
    assert expectation(observable, state) == pytest.approx(expected, abs=1e-12)


HALF_PLUS = (1 + 1j) / 2
HALF_MINUS = (1 - 1j) / 2

# Each ket written in another basis: (ket, basis, coefficients).
CONVERSIONS = [
    (KET_DIAG, BASIS_RECTILINEAR, (R, R)),
    (KET_ANTI, BASIS_RECTILINEAR, (R, -R)),
    (KET_DIAG, BASIS_CIRCULAR, (HALF_PLUS, HALF_MINUS)),
    (KET_ANTI, BASIS_CIRCULAR, (HALF_MINUS, HALF_PLUS)),
    (KET_V, BASIS_DIAGONAL, (R, R)),
    (KET_H, BASIS_DIAGONAL, (R, -R)),
    (KET_V, BASIS_CIRCULAR, (R, R)),
    (KET_H, BASIS_CIRCULAR, (1j * R, -1j * R)),
    (KET_RIGHT, BASIS_RECTILINEAR, (R, -1j * R)),
    (KET_LEFT, BASIS_RECTILINEAR, (R, 1j * R)),
    (KET_RIGHT, BASIS_DIAGONAL, (HALF_MINUS, HALF_PLUS)),
    (KET_LEFT, BASIS_DIAGONAL, (HALF_PLUS, HALF_MINUS)),
]


@pytest.mark.parametrize("ket, basis, coefficients", CONVERSIONS)
def test_basis_conversion_identities(ket, basis, coefficients):
    assert np.allclose(coordinates(ket, basis), coefficients, rtol=0.0, atol=1e-12)
    rebuilt = sum(c * b.amplitudes for c, b in zip(coefficients, basis))
    assert np.allclose(rebuilt, ket.amplitudes, rtol=0.0, atol=1e-12)


def test_coordinates_of_vertical_in_diagonal_basis():
    coords = coordinates(KET_V, BASIS_DIAGONAL)
    assert np.allclose(coords, [R, R], rtol=0.0, atol=1e-12)
    assert np.sum(np.abs(coords) ** 2) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "source, target",
    [
        (BASIS_RECTILINEAR, BASIS_DIAGONAL),
        (BASIS_DIAGONAL, BASIS_CIRCULAR),
        (BASIS_CIRCULAR, BASIS_RECTILINEAR),
    ],
)
def test_basis_change_unitary_maps_kets_in_order(source, target):
    u = basis_change_unitary(source, target)
    assert u.is_unitary
    for before, after in zip(source, target):
        assert apply_unitary(u, before) == after
    back = basis_change_unitary(target, source)
    assert (back @ u).allclose(identity(2))
