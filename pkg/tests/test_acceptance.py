"""Full-size acceptance criteria, one test each.

Each test prints the criterion's PASS/FAIL line (visible with ``-s`` or in
the captured output of a failure) and asserts the criterion as stated.
Run the same suite without pytest via ``python3 -m markov_cusum.acceptance``.
"""
import pytest

from markov_cusum.acceptance import CRITERIA, run_criterion


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = run_criterion(number, quick=False)
    with capsys.disabled():
        print("\n" + res.line())
    if not res.passed:
        pytest.fail(res.line(), pytrace=False)
