"""Acceptance checklist at full resolution; one PASS/FAIL line per criterion."""

import pytest

from dbarlab.acceptance import CHECKS

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("check", CHECKS, ids=[f"{i:02d}_{fn.__name__}" for i, fn in enumerate(CHECKS, 1)])
def test_criterion(check):
    res = check(quick=False)
    line = res.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert res.passed, res.metrics
