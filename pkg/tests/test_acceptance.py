"""The eleven acceptance criteria, one test each.

Each test prints a PASS/FAIL line with the measured value, its tolerance and
the wall-clock time, then asserts the verdict and the runtime budget.
"""

import pytest

from zdlimit import verify

# seconds; criteria without a stated budget get none
BUDGETS = {
    "acceptance_1_step_profile": 10.0,
    "acceptance_2_rational_vs_characteristics": 5.0,
    "acceptance_7_hardy_backend": 60.0,
    "acceptance_8_eps_trend": 300.0,
}

NAMES = verify.checks("acceptance")


def test_all_eleven_registered():
    assert len(NAMES) == 11
    assert [int(n.split("_")[1]) for n in NAMES] == list(range(1, 12))


@pytest.mark.parametrize("name", NAMES)
def test_criterion(name, capsys):
    res = verify.run_check(name)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail
    if name in BUDGETS:
        assert res.seconds <= BUDGETS[name], f"{res.seconds:.1f}s over budget"
