"""Reproduction suite: one test per criterion, each check printed as a line.

Run alone with ``pytest tests/test_acceptance.py -v``; the table of checks
is repeated in the terminal summary.
"""
import pytest

from floquet_aaw.acceptance import CRITERIA

RESULTS = []


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_criterion(criterion):
    rows = criterion()
    assert rows
    for row in rows:
        print(row.line())
        RESULTS.append(row)
    failed = [r.line() for r in rows if not r.passed]
    assert not failed, "\n".join(failed)


if __name__ == "__main__":
    from floquet_aaw.acceptance import run_all
    for row in run_all():
        print(row.line())
