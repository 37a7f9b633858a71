import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qwalk_gi.dynamics import (
    EvolutionSpec,
    measure_position,
    position_marginal,
    sequential_protocol,
    taylor_step,
    evolve,
)
from qwalk_gi.graphs import GiInstance, Graph
from qwalk_gi.hilbert import ScheduleHamiltonian

from conftest import random_pair


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.5))
def test_taylor_step_matches_expm(seed, h):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(6, 6))
    a = (a + a.T) / 2
    a /= np.abs(np.linalg.eigvalsh(a)).max()
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    want = scipy.linalg.expm(-1j * h * a) @ psi
    assert np.allclose(taylor_step(lambda x: a @ x, psi, h), want, atol=1e-11)


def test_k2_adiabatic():
    inst = GiInstance(Graph.complete(2), Graph.complete(2))
    _, tr = evolve(EvolutionSpec(inst, T=50.0))
    assert tr.solution_overlap[0] == pytest.approx(0.5)
    assert tr.solution_overlap[-1] > 0.99
    assert tr.max_drift < 1e-9
    assert tr.energy[0] == pytest.approx(-2 * np.cos(np.pi / 3))


def test_short_time_keeps_initial_state():
    inst = random_pair(3, np.random.default_rng(0))
    h = ScheduleHamiltonian(inst)
    psi, tr = evolve(EvolutionSpec(inst, T=1e-6))
    assert np.allclose(psi, h.ground_state(), atol=1e-5)
    assert tr.solution_overlap[-1] == pytest.approx(tr.solution_overlap[0], abs=1e-6)


def test_spec_validation():
    inst = random_pair(3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        EvolutionSpec(inst, T=0)
    with pytest.raises(ValueError):
        EvolutionSpec(inst, T=10, dt=1.0)
    with pytest.raises(ValueError):
        EvolutionSpec(inst, T=10, record_points=(1.5,))


def test_record_points_and_csv(tmp_path):
    inst = random_pair(3, np.random.default_rng(1))
    _, tr = evolve(EvolutionSpec(inst, T=5.0, record_points=(0.0, 0.5, 1.0)))
    assert list(tr.s) == [0.0, 0.5, 1.0]
    tr.write_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "s,witness,energy,solution_overlap,norm"


def test_marginal_and_measurement():
    rng = np.random.default_rng(0)
    n = 3
    psi = rng.normal(size=n**n) + 1j * rng.normal(size=n**n)
    psi /= np.linalg.norm(psi)
    p = np.abs(psi) ** 2
    digits = np.array([[(k // n**i) % n for i in range(n)] for k in range(n**n)])
    for chain in range(1, n + 1):
        want = np.bincount(digits[:, chain - 1], weights=p, minlength=n)
        assert np.allclose(position_marginal(psi, chain, n), want)
    q, prob, post = measure_position(psi, 2, rng, n)
    assert np.isclose(np.linalg.norm(post), 1)
    assert np.allclose(post[digits[:, 1] != q - 1], 0)
    assert prob == pytest.approx(position_marginal(psi, 2, n)[q - 1])


def test_measurement_statistics():
    rng = np.random.default_rng(1)
    psi = np.zeros(4, dtype=complex)
    psi[0], psi[1] = np.sqrt(0.3), np.sqrt(0.7)  # chain 1 at 1 or 2, chain 2 at 1
    outs = [measure_position(psi, 1, rng, 2)[0] for _ in range(4000)]
    assert abs(outs.count(2) / 4000 - 0.7) < 0.03


def test_protocol_non_isomorphic_never_verifies():
    inst = GiInstance(Graph.complete(3), Graph.path(3))
    for seed in range(5):
        rec = sequential_protocol(inst, T=10.0, rng=seed)
        assert not rec.verified
        assert rec.failure is not None


def test_protocol_k2():
    inst = GiInstance(Graph.complete(2), Graph.complete(2))
    recs = [sequential_protocol(inst, T=50.0, rng=s) for s in range(10)]
    assert all(r.verified for r in recs)
    assert {r.candidate for r in recs} <= {(1, 2), (2, 1)}
    js = recs[0].to_json()
    assert js["verified"] and len(js["outcomes"]) == 2
