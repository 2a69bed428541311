"""Acceptance suite: each check runs at its stated tolerance and prints one status line.

Two checks are expected to report FAIL: their targets are stated in a
normalization that the rest of the library (and the other checks) contradict.
The failing lines carry the measured deviation and the value under the
consistent convention.  They are not marked xfail, so the red result stays visible.
"""
import inspect

import pytest

from ellhol.checks import ALL_CHECKS

SEED = 0


@pytest.mark.parametrize("check", ALL_CHECKS, ids=[f.__name__.removeprefix("check_") for f in ALL_CHECKS])
def test_acceptance(check, capsys):
    kwargs = {"seed": SEED} if "seed" in inspect.signature(check).parameters else {}
    result = check(**kwargs)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
