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

import pytest

from qkdsim.eavesdrop.strategies import TranslucentEve
from qkdsim.nogo.cloning import CloningInstance
from qkdsim.nogo.cloning import CloningVerdict
from qkdsim.nogo.cloning import cloning_deviation_bound
from qkdsim.nogo.cloning import cloning_feasibility
from qkdsim.nogo.cloning import cloning_residual
from qkdsim.nogo.cloning import cloning_search
from qkdsim.nogo.cloning import orthogonal_copier
from qkdsim.nogo.cloning import pair_residual
from qkdsim.nogo.cloning import pair_with_overlap
from qkdsim.nogo.undetectable import SWEEP_COLUMNS
from qkdsim.nogo.undetectable import UndetectableStatus
from qkdsim.nogo.undetectable import random_carrier_preserving_unitary
from qkdsim.nogo.undetectable import translucent_sweep
from qkdsim.nogo.undetectable import undetectable_implies_uninformed
from qkdsim.quantum.alphabets import theta_alphabet
from qkdsim.quantum.hilbert import KET_DIAG
from qkdsim.quantum.hilbert import KET_H
from qkdsim.quantum.hilbert import KET_V
from qkdsim.quantum.hilbert import bracket
from qkdsim.quantum.hilbert import identity
from qkdsim.utils.seeding import make_rng

THETA = math.pi / 8


def test_orthogonal_states_can_be_copied():
    check = cloning_feasibility(CloningInstance(KET_V, KET_H))
    assert check.verdict is CloningVerdict.FEASIBLE_TRIVIALLY
    assert check.witness is None


def test_identical_states_can_be_copied():
    check = cloning_feasibility(CloningInstance(KET_V, KET_V))
    assert check.verdict is CloningVerdict.FEASIBLE_TRIVIALLY
    assert check.witness == pytest.approx(1.0)


def test_nonorthogonal_states_need_an_unphysical_ancilla():
    check = cloning_feasibility(CloningInstance(KET_V, KET_DIAG))
    assert check.verdict is CloningVerdict.INFEASIBLE
    assert check.witness == pytest.approx(math.sqrt(2.0))


def test_random_pairs_are_never_clonable():
    rng = make_rng(0)
    for _ in range(100):
        u, v = pair_with_overlap(float(rng.uniform(0.05, 0.95)), rng)
        check = cloning_feasibility(CloningInstance(u, v))
        assert check.verdict is CloningVerdict.INFEASIBLE
        assert check.witness > 1.0


def test_copier_works_on_its_own_basis_only():
    copier = orthogonal_copier()
    assert copier.is_unitary
    assert cloning_residual(copier, KET_V) == pytest.approx(0.0, abs=1e-12)
    assert cloning_residual(copier, KET_H) == pytest.approx(0.0, abs=1e-12)
    bound = cloning_deviation_bound(abs(bracket(KET_V, KET_DIAG)))
    assert bound > 0.0
    assert pair_residual(copier, KET_V, KET_DIAG) >= bound


def test_deviation_bound_vanishes_at_the_ends():
    assert cloning_deviation_bound(0.0) == pytest.approx(0.0)
    assert cloning_deviation_bound(1.0) == pytest.approx(0.0)
    assert cloning_deviation_bound(0.5) > 0.0
    with pytest.raises(ValueError):
        cloning_deviation_bound(1.5)


def test_pair_with_overlap_hits_requested_overlap():
    u, v = pair_with_overlap(0.3, make_rng(1))
    assert abs(bracket(u, v)) == pytest.approx(0.3)


@pytest.mark.parametrize("overlap", [None, 0.2, 0.7])
def test_random_unitaries_never_beat_the_bound(overlap):
    result = cloning_search(300, make_rng(2), overlap=overlap)
    assert result.trials == 300
    assert result.respects_bound
    assert result.min_residual > 0.0


def test_cloning_search_needs_trials():
    with pytest.raises(ValueError, match="trials"):
        cloning_search(0, make_rng(0))


def test_identity_is_undetectable_and_uninformed():
    alphabet = theta_alphabet(THETA)
    check = undetectable_implies_uninformed(
        identity(4), alphabet.ket_for_1, alphabet.ket_for_0
    )
    assert check.status is UndetectableStatus.UNINFORMED
    assert check.information_proxy == pytest.approx(0.0, abs=1e-10)
    assert check.holds


def test_random_carrier_preserving_interactions_learn_nothing():
    rng = make_rng(3)
    alphabet = theta_alphabet(THETA)
    a, b = alphabet.ket_for_1, alphabet.ket_for_0
    for _ in range(50):
        unitary = random_carrier_preserving_unitary(a, b, rng)
        check = undetectable_implies_uninformed(unitary, a, b)
        assert check.status is UndetectableStatus.UNINFORMED
        assert abs(check.probe_overlap - 1.0) < 1e-8


def test_disturbing_interaction_is_not_applicable():
    alphabet = theta_alphabet(THETA)
    check = undetectable_implies_uninformed(
        TranslucentEve(THETA, 1.0).interaction,
        alphabet.ket_for_1,
        alphabet.ket_for_0,
    )
    assert check.status is UndetectableStatus.NOT_APPLICABLE
    assert check.probe_overlap is None
    assert check.holds


def test_orthogonal_carriers_are_rejected():
    with pytest.raises(ValueError, match="orthogonal"):
        undetectable_implies_uninformed(identity(4), KET_V, KET_H)
    with pytest.raises(ValueError, match="orthogonal"):
        random_carrier_preserving_unitary(KET_V, KET_H, make_rng(0))


def test_translucent_sweep_trades_information_for_disturbance():
    frame = translucent_sweep(THETA, [0.0, 1.0 / 9.0, 0.5, 1.0])
    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame["carrier_residual"].iloc[0] <= 1e-10
    assert (frame["carrier_residual"].iloc[1:] > 1e-10).all()
    assert frame["information_proxy"].is_monotonic_increasing
    assert frame["bob_error"].is_monotonic_increasing
