import sys

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def two_pass(x):
    """Reference moments computed the obvious way: mean first, then central powers."""
    x = np.asarray(x, dtype=np.float64)
    mu = x.mean(axis=0)
    c = x - mu
    m = [np.mean(c**k, axis=0) for k in range(2, 7)]
    var = m[0]
    return {
        "mean": mu,
        "var": var,
        "skew": m[1] / var**1.5,
        "kurt": m[2] / var**2 - 3.0,
        "sums": [x.shape[0] * mk for mk in m],
    }


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(results):
        title, passed, detail = results[cid]
        terminalreporter.write_line(f"C{cid:<3d}{'PASS' if passed else 'FAIL'}  {title}: {detail}")
