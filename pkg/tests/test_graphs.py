import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qwalk_gi.graphs import (
    GiInstance,
    Graph,
    Permutation,
    apply_permutation,
    automorphism_count,
    brute_force_iso,
    check_srg,
    cost_f,
    edge_count_range,
    is_rigid,
    load_srg_catalog,
    random_instance,
    random_rigid_instance,
    relabel_instance,
    srg_instances,
)

from conftest import random_pair


def perms(n):
    return st.permutations(range(1, n + 1)).map(lambda p: Permutation(tuple(p)))


@st.composite
def graphs(draw, n_min=1, n_max=7):
    n = draw(st.integers(n_min, n_max))
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(n, frozenset(chosen))


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, frozenset({(1, 1)}))
    with pytest.raises(ValueError):
        Graph(3, frozenset({(1, 4)}))
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 2), (2, 1)])
    assert Graph(3, frozenset({(2, 1)})).edges == {(1, 2)}


def test_named_graphs():
    assert Graph.complete(5).m == 10
    assert Graph.cycle(5).m == 5
    assert Graph.path(4).m == 3
    assert Graph.path(4).is_connected()
    assert not Graph.empty(3).is_connected()


def test_permutation_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation((1, 1, 3))


@given(perms(6), perms(6))
def test_compose_and_inverse(p, q):
    e = Permutation.identity(6)
    assert p.compose(p.inverse()) == e
    assert p.compose(q)(3) == p(q(3))
    assert (p.matrix() @ q.matrix() == p.compose(q).matrix()).all()


@given(graphs(n_min=2), st.data())
def test_apply_permutation_matches_matrix_relabel(g, data):
    pi = data.draw(perms(g.n))
    p = pi.matrix()
    want = p @ g.adjacency().astype(int) @ p.T
    assert (apply_permutation(pi, g).adjacency() == want).all()


@given(graphs(n_min=2), st.data())
def test_cost_f_against_matrix_norm(g, data):
    pi, sigma = data.draw(perms(g.n)), data.draw(perms(g.n))
    inst = GiInstance(g, apply_permutation(sigma, g))
    p = pi.matrix()
    a1, a2 = g.adjacency().astype(int), inst.g2.adjacency().astype(int)
    # each differing edge shows up twice in the symmetric matrix
    assert cost_f(pi, inst) == np.abs(p @ a1 @ p.T - a2).sum() // 2
    assert cost_f(sigma, inst) == 0


def test_cost_f_example():
    inst = GiInstance(Graph.complete(3), Graph.path(3))
    assert all(cost_f(Permutation(p), inst) == 1 for p in itertools.permutations((1, 2, 3)))


@given(graphs(n_max=6), st.data())
def test_brute_force_iso_matches_exhaustive(g, data):
    sigma = data.draw(perms(g.n))
    inst = GiInstance(g, apply_permutation(sigma, g))
    want = [Permutation(p) for p in itertools.permutations(range(1, g.n + 1)) if cost_f(Permutation(p), inst) == 0]
    got = brute_force_iso(inst)
    assert got == want
    assert sigma in got
    assert len(got) == automorphism_count(g)


def test_automorphism_counts():
    assert automorphism_count(Graph.cycle(5)) == 10
    assert automorphism_count(Graph.complete(4)) == 24
    assert automorphism_count(Graph.path(4)) == 2
    assert brute_force_iso(GiInstance(Graph.complete(3), Graph.path(3))) == []


def test_brute_force_cap():
    with pytest.raises(ValueError, match="cap"):
        brute_force_iso(GiInstance(Graph.empty(10), Graph.empty(10)))


def test_smallest_rigid_graphs():
    # no graph on 2..5 vertices is rigid; 8 of the 156 graphs on 6 vertices are
    for n in range(2, 6):
        for bits in itertools.product((0, 1), repeat=n * (n - 1) // 2):
            pairs = itertools.compress(itertools.combinations(range(1, n + 1), 2), bits)
            assert not is_rigid(Graph(n, frozenset(pairs)))
    # each rigid graph on 6 vertices has 720 distinct labelings
    pairs6 = list(itertools.combinations(range(1, 7), 2))
    count = sum(
        is_rigid(Graph(6, frozenset(itertools.compress(pairs6, bits)))) for bits in itertools.product((0, 1), repeat=15)
    )
    assert count == 8 * 720


def test_edge_count_range():
    assert edge_count_range(8) == (16, 24)
    assert edge_count_range(6) == (12, 12)
    lo, hi = edge_count_range(5)
    assert lo > hi


def test_random_instance_properties():
    for seed in range(20):
        inst = random_instance(8, seed)
        assert inst.g1.is_connected()
        assert 16 <= inst.g1.m <= 24
        assert cost_f(inst.planted, inst) == 0
    assert random_instance(7, 3) == random_instance(7, 3)


def test_random_instance_empty_range():
    with pytest.raises(ValueError, match="range"):
        random_instance(3, 0)


def test_random_rigid_instance():
    inst, used = random_rigid_instance(6, 0)
    assert is_rigid(inst.g1)
    assert len(brute_force_iso(inst)) == 1
    again, used2 = random_rigid_instance(6, 0)
    assert (again, used2) == (inst, used)


def test_json_roundtrip(tmp_path):
    inst = random_instance(7, 11)
    path = tmp_path / "inst.json"
    inst.save(path)
    assert GiInstance.load(path) == inst
    data = json.loads(path.read_text())
    assert set(data) == {"n", "edges1", "edges2", "planted"}


def test_planted_must_be_valid():
    with pytest.raises(ValueError):
        GiInstance(Graph.path(3), Graph.path(3), Permutation((2, 1, 3)))


def test_srg_catalog():
    fams = {f.params: f for f in load_srg_catalog()}
    assert (10, 3, 0, 1) in fams  # Petersen
    assert len(fams[(16, 6, 2, 2)].members) == 2  # Shrikhande and the 4x4 rook graph
    for fam in fams.values():
        for g in fam.members:
            check_srg(g, *fam.params)
    insts = srg_instances(fams[(10, 3, 0, 1)], 3, seed=0)
    assert len(insts) == 3
    assert all(cost_f(i.planted, i) == 0 for i in insts)


def test_check_srg_rejects():
    with pytest.raises(ValueError):
        check_srg(Graph.cycle(6), 6, 2, 0, 1)


@given(st.integers(0, 2**32 - 1))
def test_relabel_preserves_isomorphism(seed):
    rng = np.random.default_rng(seed)
    inst = random_pair(5, rng, iso=bool(seed % 2))
    s1, s2 = Permutation.random(5, rng), Permutation.random(5, rng)
    rel = relabel_instance(inst, s1, s2)
    assert bool(brute_force_iso(rel)) == bool(brute_force_iso(inst))
    if inst.planted is not None:
        assert cost_f(rel.planted, rel) == 0
