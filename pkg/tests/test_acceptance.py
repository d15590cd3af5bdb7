"""The twelve acceptance criteria, each at its stated tolerance with seed 42.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS/FAIL line per
criterion; the same lines are printed by ``mmlab suite``.
"""

import json
import os

import pytest

from mmlab import report
from mmlab.suite import CRITERIA, run_criterion

SEED = 42
WORKERS = int(os.environ.get("MMLAB_WORKERS", min(4, os.cpu_count() or 1)))


@pytest.mark.parametrize("number,title", [(k, t) for k, t, _ in CRITERIA], ids=[f"criterion_{k}" for k, _, _ in CRITERIA])
def test_criterion(number, title, capsys):
    rec = run_criterion(number, SEED, WORKERS)
    line = f"[{'PASS' if rec['passed'] else 'FAIL'}] criterion {number}: {title} ({rec['seconds']:.1f} s)"
    with capsys.disabled():
        print("\n" + line)
    assert rec["passed"], report.dumps({k: v for k, v in rec.items() if k != "seconds"})
