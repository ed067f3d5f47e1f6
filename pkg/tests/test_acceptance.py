"""Every acceptance criterion at its stated tolerance, one pass/fail line each.

The whole suite runs once per session at the acceptance sample count; each
test below reports and asserts a single criterion.
"""

import pytest

from pushspace.verification import ACCEPTANCE_SAMPLES, CRITERIA, run_verification


@pytest.fixture(scope="session")
def report():
    return run_verification(ACCEPTANCE_SAMPLES)


def _id(number, name):
    part = name[1] if name.startswith("(") else ""
    return f"criterion_{number:02d}{part}"


IDS = [_id(number, name) for number, name, _ in CRITERIA]


@pytest.mark.parametrize("position", range(len(CRITERIA)), ids=IDS)
def test_criterion(report, position, capsys):
    result = report.results[position]
    with capsys.disabled():
        print("\n" + result.line())
        if result.error:
            print(result.error)
    assert result.passed, result.line()


def test_report_lists_every_criterion(report):
    assert len(report.results) == len(CRITERIA)
    assert all(r.runtime >= 0 for r in report.results)
