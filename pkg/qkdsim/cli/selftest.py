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
Acceptance suite behind `qkdsim selftest`.

Every check returns a CheckResult; --quick shrinks the sample sizes while
keeping each tolerance at roughly four standard errors or more.
"""

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass
from dataclasses import field
from typing import Any

import numpy as np

from qkdsim.cli.config import ExperimentConfig
from qkdsim.cli.experiment import aggregate
from qkdsim.cli.experiment import build_report
from qkdsim.cli.experiment import report_json
from qkdsim.cli.experiment import run_sessions
from qkdsim.nogo.cloning import CloningInstance
from qkdsim.nogo.cloning import CloningVerdict
from qkdsim.nogo.cloning import cloning_feasibility
from qkdsim.nogo.cloning import cloning_search
from qkdsim.nogo.cloning import random_nonorthogonal_pair
from qkdsim.nogo.undetectable import UndetectableStatus
from qkdsim.nogo.undetectable import random_carrier_preserving_unitary
from qkdsim.nogo.undetectable import translucent_sweep
from qkdsim.nogo.undetectable import undetectable_implies_uninformed
from qkdsim.postprocess.amplify import AmplifyConfig
from qkdsim.postprocess.amplify import privacy_amplify
from qkdsim.postprocess.reconcile import ReconcileConfig
from qkdsim.postprocess.reconcile import discards_from_transcript
from qkdsim.postprocess.reconcile import reconcile
from qkdsim.protocols.bb84 import opaque_escape_probability
from qkdsim.protocols.records import KeyMaterial
from qkdsim.protocols.records import KeyStage
from qkdsim.quantum.hilbert import POLARIZATION_KETS
from qkdsim.quantum.hilbert import bracket
from qkdsim.quantum.hilbert import random_hermitian
from qkdsim.quantum.hilbert import random_ket
from qkdsim.quantum.hilbert import uncertainty_product
from qkdsim.report_types import SessionReport
from qkdsim.transport.transcript import PublicTranscript
from qkdsim.utils.seeding import make_rng

logger = logging.getLogger(__name__)

EXIT_ACCEPTANCE_FAILURE = 3

_R = 1.0 / math.sqrt(2.0)
_P = (1 + 1j) / 2
_M = (1 - 1j) / 2

BRACKET_ORDER = ("V", "H", "D", "A", "R", "L")

# Rows are bras, columns kets, both in BRACKET_ORDER.
PRINTED_BRACKETS = np.array(
    [
        [1, 0, _R, _R, _R, _R],
        [0, 1, _R, -_R, -1j * _R, 1j * _R],
        [_R, _R, 1, 0, _P, _M],
        [_R, -_R, 0, 1, _M, _P],
        [_R, 1j * _R, _M, _P, 1, 0],
        [_R, -1j * _R, _P, _M, 0, 1],
    ],
    dtype=complex,
)

# Diagonal x circular cells are printed as the conjugates of the inner
# products the ket definitions give.
CONJUGATED_CELLS = frozenset(
    (row, col)
    for row in ("D", "A", "R", "L")
    for col in ("D", "A", "R", "L")
    if (row in "DA") != (col in "DA")
)

BRACKET_TOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "seconds": round(self.seconds, 3),
        }


@dataclass(frozen=True)
class Sizes:
    slots: int
    sessions_detection: int
    reconcile_seeds: int
    amplify_triples: int
    amplify_sessions: int
    cloning_pairs: int
    probe_unitaries: int
    uncertainty_triples: int


FULL = Sizes(100_000, 10_000, 100, 100, 100, 10_000, 1_000, 10_000)
QUICK = Sizes(30_000, 2_000, 20, 100, 20, 2_000, 200, 2_000)


def bracket_table() -> np.ndarray:
    table = np.zeros((6, 6), dtype=complex)
    for row, bra in enumerate(BRACKET_ORDER):
        for col, ket in enumerate(BRACKET_ORDER):
            table[row, col] = bracket(POLARIZATION_KETS[bra], POLARIZATION_KETS[ket])
    return table


def bracket_mismatches(tol: float = BRACKET_TOL) -> list[str]:
    computed = bracket_table()
    bad = []
    for row, bra in enumerate(BRACKET_ORDER):
        for col, ket in enumerate(BRACKET_ORDER):
            expected = PRINTED_BRACKETS[row, col]
            if (bra, ket) in CONJUGATED_CELLS:
                expected = expected.conjugate()
            if abs(computed[row, col] - expected) > tol:
                bad.append(f"<{bra}|{ket}>")
    return bad


def _sessions(seeds: list[int], **fields: Any) -> list[SessionReport]:
    config = ExperimentConfig.model_validate({"seeds": seeds, **fields})
    return [run.report for run in run_sessions(config.session_config(), seeds)]


def _mean(reports: list[SessionReport], name: str) -> float | None:
    entry = aggregate(reports).get(name)
    return None if entry is None else entry["mean"]


def _within(value: float | None, target: float, tol: float) -> bool:
    return value is not None and abs(value - target) <= tol


def check_brackets(sizes: Sizes) -> CheckResult:
    bad = bracket_mismatches()
    return CheckResult("bracket table", not bad, {"mismatched_cells": bad})


def check_bb84_reception(sizes: Sizes) -> CheckResult:
    reports = _sessions([1], protocol="bb84", n=sizes.slots)
    accuracy = _mean(reports, "pre_sift_accuracy")
    return CheckResult(
        "bb84 pre-sift accuracy",
        _within(accuracy, 0.75, 0.01),
        {"pre_sift_accuracy": accuracy, "expected": 0.75},
    )


def check_error_jump(sizes: Sizes) -> CheckResult:
    detail = {}
    passed = True
    for lam in (0.0, 0.5, 1.0):
        reports = _sessions(
            [2], protocol="bb84", n=sizes.slots, eve={"kind": "opaque", "lam": lam}
        )
        error = _mean(reports, "pre_sift_error")
        expected = 0.25 + lam / 8
        detail[f"lam={lam:g}"] = {"pre_sift_error": error, "expected": expected}
        passed = passed and _within(error, expected, 0.01)
    return CheckResult("opaque error-rate jump", passed, detail)


def check_raw_disagreement(sizes: Sizes) -> CheckResult:
    reports = _sessions([3], protocol="bb84", n=sizes.slots, eve="opaque:1")
    disagreement = _mean(reports, "raw_error_rate")
    sifted = _mean(reports, "sifted_length")
    return CheckResult(
        "opaque raw-key disagreement",
        _within(disagreement, 0.25, 0.01),
        {"raw_error_rate": disagreement, "sifted_length": sifted, "expected": 0.25},
    )


def check_detection(sizes: Sizes) -> CheckResult:
    seeds = list(range(sizes.sessions_detection))
    reports = _sessions(seeds, protocol="bb84", n=100, m=20, eve="opaque:1")
    frequency = _mean(reports, "eve_detected")
    expected = 1.0 - 0.75**20
    p_false = opaque_escape_probability(1.0, 200)
    closed_form_ok = abs(p_false - 0.75**200) <= 1e-6 * 0.75**200
    return CheckResult(
        "noiseless detection probability",
        _within(frequency, expected, 0.005) and closed_form_ok,
        {
            "detection_frequency": frequency,
            "expected": expected,
            "p_false_m200": p_false,
        },
    )


def check_b92_projective(sizes: Sizes) -> CheckResult:
    reports = _sessions(
        [4],
        protocol="b92",
        n=sizes.slots,
        receiver_kind="projective",
        theta=math.pi / 8,
    )
    erasure = _mean(reports, "erasure_rate")
    correct = _mean(reports, "pre_sift_accuracy")
    return CheckResult(
        "b92 projective receiver",
        _within(erasure, 0.75, 0.01) and _within(correct, 0.25, 0.01),
        {"erasure_rate": erasure, "correct_reception": correct},
    )


def check_b92_povm(sizes: Sizes) -> CheckResult:
    reports = _sessions(
        [5], protocol="b92", n=sizes.slots, receiver_kind="povm", theta=math.pi / 8
    )
    erasure = _mean(reports, "erasure_rate")
    wrong = _mean(reports, "raw_error_rate")
    expected = math.cos(math.pi / 4)
    return CheckResult(
        "b92 povm receiver",
        _within(erasure, expected, 0.01) and wrong == 0.0,
        {"erasure_rate": erasure, "expected": expected, "raw_error_rate": wrong},
    )


def check_bell(sizes: Sizes) -> CheckResult:
    clean = _sessions([6], protocol="epr", n=sizes.slots)
    attacked = _sessions([7], protocol="epr", n=sizes.slots, eve="opaque:1")
    beta = clean[0].bell_beta
    beta_eve = attacked[0].bell_beta
    se_eve = attacked[0].bell_beta_se
    passed = (
        _within(beta, -0.5, 0.02)
        and beta_eve is not None
        and se_eve is not None
        and beta_eve >= -2.0 * se_eve
    )
    return CheckResult(
        "epr bell statistic",
        passed,
        {"beta": beta, "beta_with_eve": beta_eve, "se_with_eve": se_eve},
    )


def check_epr_agreement(sizes: Sizes) -> CheckResult:
    reports = _sessions([8], protocol="epr", n=sizes.slots)
    disagreement = reports[0].raw_error_rate
    return CheckResult(
        "epr raw-key agreement",
        disagreement == 0.0 and reports[0].keys_match is True,
        {"raw_error_rate": disagreement, "sifted_length": reports[0].sifted_length},
    )


def _estimated_pair(n: int, error_rate: float, rng) -> tuple[KeyMaterial, KeyMaterial]:
    alice_bits = rng.integers(2, size=n)
    flips = rng.random(n) < error_rate
    slots = np.arange(n)
    return (
        KeyMaterial(alice_bits, slots, KeyStage.ESTIMATED),
        KeyMaterial(alice_bits ^ flips, slots, KeyStage.ESTIMATED),
    )


def check_reconcile(sizes: Sizes) -> CheckResult:
    identical = 0
    accounting_ok = True
    for seed in range(sizes.reconcile_seeds):
        rng = make_rng(seed)
        alice, bob = _estimated_pair(10_000, 0.05, rng)
        transcript = PublicTranscript()
        alice_out, bob_out, _ = reconcile(
            alice, bob, ReconcileConfig(), transcript, rng=rng, error_rate=0.05
        )
        identical += int(np.array_equal(alice_out.bits, bob_out.bits))
        lost = len(alice) - len(alice_out)
        accounting_ok = accounting_ok and discards_from_transcript(transcript) == lost
    required = sizes.reconcile_seeds - max(1, sizes.reconcile_seeds // 100)
    return CheckResult(
        "reconciliation",
        identical >= required and accounting_ok,
        {
            "identical": identical,
            "seeds": sizes.reconcile_seeds,
            "discard_accounting": accounting_ok,
        },
    )


def check_amplify(sizes: Sizes) -> CheckResult:
    rng = make_rng(11)
    contract_ok = True
    for _ in range(sizes.amplify_triples):
        n = int(rng.integers(64, 2048))
        s = int(rng.integers(1, 40))
        k = int(rng.integers(0, n - s))
        key = KeyMaterial(rng.integers(2, size=n), np.arange(n), KeyStage.RECONCILED)
        final = privacy_amplify(key, AmplifyConfig(s=s), PublicTranscript(), rng, k=k)
        contract_ok = contract_ok and len(final) == n - k - s
    reports = _sessions(
        list(range(sizes.amplify_sessions)),
        protocol="bb84-noisy",
        n=20_000,
        eve="opaque:1",
        r_max=0.35,
        reconcile={"step1_rounds": 5},
        amplify={"s": 30},
    )
    prediction = _mean(reports, "eve_prediction_rate")
    return CheckResult(
        "privacy amplification",
        contract_ok and prediction is not None and prediction <= 0.52,
        {"length_contract": contract_ok, "eve_prediction_rate": prediction},
    )


def check_no_cloning(sizes: Sizes) -> CheckResult:
    rng = make_rng(12)
    violations = 0
    for _ in range(sizes.cloning_pairs):
        u, v = random_nonorthogonal_pair(rng)
        check = cloning_feasibility(CloningInstance(u, v))
        if check.verdict is not CloningVerdict.INFEASIBLE or not check.witness > 1.0:
            violations += 1
    search = cloning_search(max(1, sizes.cloning_pairs // 10), rng)
    return CheckResult(
        "no-cloning",
        violations == 0 and search.respects_bound,
        {"violations": violations, "search_min_margin": search.min_margin},
    )


def check_undetectable(sizes: Sizes) -> CheckResult:
    rng = make_rng(13)
    worst = 0.0
    uninformed = True
    for _ in range(sizes.probe_unitaries):
        a, b = random_nonorthogonal_pair(rng, margin=0.05)
        unitary = random_carrier_preserving_unitary(a, b, rng)
        check = undetectable_implies_uninformed(unitary, a, b)
        uninformed = uninformed and check.status is UndetectableStatus.UNINFORMED
        if check.probe_overlap is not None:
            worst = max(worst, abs(check.probe_overlap - 1.0))
    frame = translucent_sweep(math.pi / 8, np.linspace(0.0, 1.0, 10))
    zero_residual = frame["carrier_residual"] <= 1e-10
    zero_information = frame["information_proxy"] <= 1e-10
    together = bool((zero_residual == zero_information).all())
    monotone = bool(
        frame["information_proxy"].is_monotonic_increasing
        and frame["bob_error"].is_monotonic_increasing
    )
    return CheckResult(
        "undetectable implies uninformed",
        uninformed and worst <= 1e-10 and together and monotone,
        {
            "max_probe_overlap_deviation": worst,
            "vanish_together": together,
            "monotone": monotone,
        },
    )


def check_uncertainty(sizes: Sizes) -> CheckResult:
    rng = make_rng(14)
    worst = math.inf
    for index in range(sizes.uncertainty_triples):
        dim = 2 if index % 2 == 0 else 4
        a = random_hermitian(dim, rng)
        b = random_hermitian(dim, rng)
        lhs, rhs = uncertainty_product(a, b, random_ket(dim, rng))
        worst = min(worst, lhs - rhs)
    return CheckResult(
        "uncertainty inequality", worst >= -1e-10, {"min_lhs_minus_rhs": worst}
    )


def check_determinism(sizes: Sizes) -> CheckResult:
    config = ExperimentConfig.model_validate(
        {
            "protocol": "bb84-noisy",
            "n": 4000,
            "seeds": [21, 22, 23],
            "eve": "opaque:0.3",
            "channel": {"p_flip": 0.02},
        }
    )
    texts = []
    for _ in range(2):
        reports = [
            run.report for run in run_sessions(config.session_config(), config.seeds)
        ]
        texts.append(report_json(build_report(config, reports)))
    return CheckResult("determinism", texts[0] == texts[1], {"bytes": len(texts[0])})


CHECKS: list[Callable[[Sizes], CheckResult]] = [
    check_brackets,
    check_bb84_reception,
    check_error_jump,
    check_raw_disagreement,
    check_detection,
    check_b92_projective,
    check_b92_povm,
    check_bell,
    check_epr_agreement,
    check_reconcile,
    check_amplify,
    check_no_cloning,
    check_undetectable,
    check_uncertainty,
    check_determinism,
]


def run_selftest(quick: bool = False) -> list[CheckResult]:
    sizes = QUICK if quick else FULL
    results = []
    for index, check in enumerate(CHECKS, start=1):
        started = time.perf_counter()
        try:
            result = check(sizes)
        except Exception as exc:
            logger.exception("Acceptance check %s raised", check.__name__)
            result = CheckResult(check.__name__, False, {"error": str(exc)})
        result.seconds = time.perf_counter() - started
        mark = "✅" if result.passed else "❌"
        logger.info(
            "%s [%02d] %s (%.1fs) %s",
            mark,
            index,
            result.name,
            result.seconds,
            result.detail,
        )
        results.append(result)
    return results


def selftest_exit_code(results: list[CheckResult]) -> int:
    return 0 if all(result.passed for result in results) else EXIT_ACCEPTANCE_FAILURE
