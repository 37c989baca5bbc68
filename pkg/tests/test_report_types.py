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

import json

from qkdsim.report_types import STATISTIC_FIELDS
from qkdsim.report_types import SessionAborted
from qkdsim.report_types import SessionStatus
from qkdsim.report_types import create_aborted_report
from qkdsim.report_types import create_completed_report
from qkdsim.report_types import extract_abort_reason
from qkdsim.report_types import is_aborted_report
from qkdsim.report_types import is_completed_report


def test_completed_report():
    report = create_completed_report("bb84", 4, sifted_length=10, keys_match=True)
    assert is_completed_report(report)
    assert not is_aborted_report(report)
    assert extract_abort_reason(report) is None
    assert report.attempts == 1


def test_aborted_report_keeps_partial_statistics():
    report = create_aborted_report("epr", 2, "Bell test", bell_beta=0.1, attempts=3)
    assert is_aborted_report(report)
    assert report.bell_beta == 0.1
    assert report.final_key_length is None
    assert extract_abort_reason(report) == "Bell test"


def test_report_serializes_status_as_text():
    report = create_completed_report("b92", 0, erasure_rate=0.7)
    data = report.to_dict()
    assert data["status"] == "completed"
    assert json.loads(report.to_json())["erasure_rate"] == 0.7


def test_status_helpers_accept_dicts():
    assert is_aborted_report({"status": "aborted"})
    assert is_completed_report({"status": SessionStatus.COMPLETED})
    assert extract_abort_reason({"reason": "exhausted"}) == "exhausted"
    assert not is_completed_report({})


def test_statistic_fields_exclude_identity():
    assert "status" not in STATISTIC_FIELDS
    assert "seed" not in STATISTIC_FIELDS
    assert "raw_error_rate" in STATISTIC_FIELDS


def test_session_aborted_carries_reason():
    error = SessionAborted("key exhausted")
    assert error.reason == "key exhausted"
    assert str(error) == "key exhausted"
