import sys

import numpy as np
import pytest

from eqrkdg import DGSpace, build_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def periodic_space(n=4, k=2, lo=-2 * np.pi, hi=2 * np.pi, dim=2, bc="periodic"):
    mesh = build_mesh([(lo, hi)] * dim, [n] * dim, bc)
    return DGSpace(mesh, k)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(results):
        for line in results[tag]:
            terminalreporter.write_line(line)
