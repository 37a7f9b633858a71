import os

import hypothesis
import numpy as np
import pytest

from qwalk_gi.graphs import GiInstance, Graph, Permutation, apply_permutation

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def k2():
    return GiInstance(Graph.complete(2), Graph.complete(2))


@pytest.fixture
def c5():
    return GiInstance(Graph.cycle(5), Graph.cycle(5))


@pytest.fixture
def k3_p3():
    return GiInstance(Graph.complete(3), Graph.path(3))


def random_pair(n, rng, iso=True, p=0.5):
    """Random G(n, p) graph and either a relabeled copy or an independent draw."""
    a = np.triu(rng.random((n, n)) < p, 1)
    g = Graph(n, frozenset((i + 1, j + 1) for i, j in zip(*np.nonzero(a))))
    if iso:
        pi = Permutation.random(n, rng)
        return GiInstance(g, apply_permutation(pi, g), pi)
    b = np.triu(rng.random((n, n)) < p, 1)
    return GiInstance(g, Graph(n, frozenset((i + 1, j + 1) for i, j in zip(*np.nonzero(b)))))


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
