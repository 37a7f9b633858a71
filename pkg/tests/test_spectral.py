import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qwalk_gi.graphs import GiInstance, Graph, random_instance
from qwalk_gi.hilbert import ScheduleHamiltonian
from qwalk_gi.spectral import (
    ConvergenceError,
    annealing_time_estimate,
    epsilon_bound,
    gap_sweep,
    lanczos_lowest,
    lowest_two,
)

from conftest import random_pair


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_lanczos_against_eigh(seed):
    rng = np.random.default_rng(seed)
    dim = 300
    a = sp.random(dim, dim, density=0.02, random_state=rng)
    a = (a + a.T).toarray() + np.diag(rng.normal(size=dim))
    w, v = np.linalg.eigh(a)
    vals, vecs, res = lanczos_lowest(lambda x: a @ x, dim, nev=2, tol=1e-9)
    assert res <= 1e-9
    assert np.allclose(vals, w[:2], atol=1e-8)
    assert abs(abs(vecs[0] @ v[:, 0]) - 1) < 1e-6 or abs(w[1] - w[0]) < 1e-6


def test_lanczos_deflation():
    rng = np.random.default_rng(0)
    a = np.diag(np.arange(50.0))
    e0 = np.zeros(50)
    e0[0] = 1
    vals, vecs, _ = lanczos_lowest(lambda x: a @ x, 50, deflate=[e0], tol=1e-10)
    assert np.isclose(vals[0], 1.0)


def test_lanczos_failure_raises():
    a = np.diag(np.arange(200.0))
    with pytest.raises(ConvergenceError):
        lanczos_lowest(lambda x: a @ x, 200, tol=1e-14, basis_size=4, keep=1, max_restarts=2)


@pytest.mark.parametrize("s", [0.0, 0.3, 0.77, 1.0])
def test_lowest_two_dense_vs_lanczos(s):
    inst = random_pair(4, np.random.default_rng(2))
    h = ScheduleHamiltonian(inst)
    d = lowest_two(s, h, method="dense")
    l = lowest_two(s, h, method="lanczos")
    assert np.isclose(d[0], l[0], atol=1e-9)
    assert np.isclose(d[2], l[2], atol=1e-9)
    w = np.linalg.eigvalsh(h.dense(s))
    assert np.isclose(d[0], w[0]) and np.isclose(d[2], w[1])


def test_k2_gap_against_dense():
    inst = GiInstance(Graph.complete(2), Graph.complete(2))
    sw = gap_sweep(inst, grid_size=11, refine=False)
    for s, g in zip(sw.s, sw.gap):
        w = np.linalg.eigvalsh(ScheduleHamiltonian(inst).dense(s))
        assert np.isclose(g, w[1] - w[0])
    # s = 0: two chains with levels +-1/2 give -1, 0, 0, 1
    assert sw.gap[0] == pytest.approx(1.0)


def test_sweep_refinement_and_rows():
    inst = GiInstance(Graph.cycle(4), Graph.cycle(4))
    sw = gap_sweep(inst, grid_size=21)
    assert len(sw.s) > 21
    assert sw.refined.sum() == len(sw.s) - 21
    assert np.all(np.diff(sw.s) > 0)
    coarse = sw.gap[~sw.refined]
    assert sw.g_min <= coarse.min() + 1e-12


def test_sweep_is_independent_of_jobs():
    inst = random_pair(4, np.random.default_rng(3))
    a = gap_sweep(inst, grid_size=17, jobs=1)
    b = gap_sweep(inst, grid_size=17, jobs=2)
    assert np.array_equal(a.s, b.s)
    assert np.array_equal(a.gap, b.gap)


def test_epsilon_and_time_estimate():
    inst = random_pair(4, np.random.default_rng(4))
    sw = gap_sweep(inst, grid_size=11, retain_vectors=True, refine=False)
    eps = epsilon_bound(inst, sw)
    assert eps == pytest.approx(sw.epsilon)
    if sw.g_min > sw.threshold:
        assert annealing_time_estimate(sw) == pytest.approx(eps / sw.g_min**2)
    with pytest.raises(ValueError):
        epsilon_bound(inst, gap_sweep(inst, grid_size=3, refine=False))


def test_degenerate_final_point_flagged():
    # C4 has 8 automorphisms, so the s = 1 ground level is 8-fold degenerate
    sw = gap_sweep(GiInstance(Graph.cycle(4), Graph.cycle(4)), grid_size=5, refine=False)
    assert sw.degenerate[-1]
    assert not sw.degenerate[0]


def test_sweep_csv(tmp_path):
    sw = gap_sweep(GiInstance(Graph.complete(2), Graph.complete(2)), grid_size=5, refine=False)
    sw.write_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "s,e0,e1,gap,degenerate"
    assert len(lines) == 6
