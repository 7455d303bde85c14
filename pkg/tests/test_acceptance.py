"""The ten acceptance criteria at their stated tolerances.

Each test prints the criterion's one-line verdict; the lines are repeated in
the terminal summary.  A failing criterion fails its test: no tolerance here
is relaxed relative to the criterion text.
"""

import pytest

from bbm_extremal.experiments.acceptance import CRITERIA

LINES: dict = {}


@pytest.mark.acceptance
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    r = CRITERIA[number]()
    LINES[number] = r.line()
    print(r.line())
    assert r.passed, r.line()
