"""The twelve acceptance criteria, each run at its stated tolerance.

Every test prints one ``[PASS]`` or ``[FAIL]`` line with the measured value
and threshold, so a plain ``pytest -v`` log doubles as the acceptance report.
Solves shared between criteria are cached in one validation context.
"""

import math

import pytest

from hcizflow.validation import CRITERIA, SUITES, ValidationContext, run_one


@pytest.fixture(scope="module")
def context():
    return ValidationContext(seed=0)


@pytest.mark.slow
@pytest.mark.parametrize("number", SUITES["core"], ids=lambda n: f"criterion_{n:02d}")
def test_acceptance_criterion(number, context, capsys):
    res = run_one(number, context)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.number == number
    assert math.isfinite(res.value)
    assert res.passed, res.details


def test_every_criterion_is_registered():
    assert sorted(CRITERIA) == list(range(1, 13))
    assert set(SUITES["quick"]) <= set(SUITES["core"])
