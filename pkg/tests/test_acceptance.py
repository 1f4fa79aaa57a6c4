"""One test per acceptance criterion, full sizes; the summary lines are printed at the end of the run."""

import pytest

from l2tor import acceptance

LINES = {}


@pytest.mark.parametrize("check", acceptance.CHECKS, ids=lambda c: c.__name__)
def test_criterion(check):
    res = check(quick=False)
    LINES[res.number] = res.line()
    print(res.line())
    assert res.passed, res.line()
