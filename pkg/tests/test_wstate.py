import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qwalk_gi.wstate import (
    ChainPrepSpec,
    aux_gap_analytic,
    aux_gap_numeric,
    aux_hamiltonian,
    ff_ground_check,
    ff_hamiltonian,
    ff_local_terms,
    midpoint,
    prepare_chain,
    w_state,
    write_gap_table,
)


def test_midpoint():
    assert [midpoint(n) for n in (2, 3, 4, 5)] == [1, 2, 2, 3]


def test_spec_validation():
    with pytest.raises(ValueError):
        ChainPrepSpec(3, V=0)
    with pytest.raises(ValueError):
        ChainPrepSpec(1)


def test_gap_endpoints_n3():
    assert aux_gap_analytic(3, 1.0, 0.0) == pytest.approx(1.0)
    assert aux_gap_numeric(3, 1.0, 0.0) == pytest.approx(1.0)
    assert aux_gap_analytic(3, 1.0, 1.0) == pytest.approx(np.cos(np.pi / 4))
    assert aux_gap_numeric(3, 1.0, 1.0) == pytest.approx(np.cos(np.pi / 4))


@given(st.integers(2, 64), st.sampled_from([0.5, 1.0, 2.0]))
def test_s1_endpoint_agrees(n, V):
    c1, c2 = np.cos(np.pi / (n + 1)), np.cos(2 * np.pi / (n + 1))
    assert aux_gap_analytic(n, V, 1.0) == pytest.approx(abs(c2 - c1), abs=1e-12)
    assert aux_gap_numeric(n, V, 1.0) == pytest.approx(abs(c2 - c1), abs=1e-9)


def test_s0_numeric_is_pinning_strength():
    # at s = 0 only |mid> is shifted, by -V
    for n in (4, 7, 10):
        assert aux_gap_numeric(n, 2.0, 0.0) == pytest.approx(2.0)


def test_gap_domain_errors():
    with pytest.raises(ValueError):
        aux_gap_analytic(1, 1.0, 0.5)
    with pytest.raises(ValueError):
        aux_gap_numeric(3, 1.0, 1.5)


def test_aux_hamiltonian_endpoints():
    h0 = aux_hamiltonian(5, 1.5, 0.0)
    assert h0[2, 2] == -1.5 and np.count_nonzero(h0) == 1
    h1 = aux_hamiltonian(5, 1.5, 1.0)
    assert np.allclose(np.diag(h1), 0) and h1[0, 1] == -0.5


def test_prepare_chain_n3():
    psi, t, fid = prepare_chain(ChainPrepSpec(3, V=1.0, T=100.0))
    assert fid[0] == pytest.approx(0.5)
    assert fid[-1] >= 0.999
    assert np.isclose(np.linalg.norm(psi), 1)


def test_prepare_chain_zero_time():
    _, _, fid = prepare_chain(ChainPrepSpec(3, T=0.0))
    assert np.allclose(fid, 0.5)


def test_fidelity_grows_on_doubling_ladder():
    fids = [prepare_chain(ChainPrepSpec(5, T=T), record=3)[2][-1] for T in (2, 4, 8, 16, 32, 64)]
    assert all(b >= a - 0.01 for a, b in zip(fids, fids[1:]))
    assert fids[-1] > 0.99


@pytest.mark.parametrize("n", [2, 3, 5, 8, 17])
def test_frustration_free(n):
    assert ff_ground_check(n)
    h = ff_hamiltonian(n)
    w = w_state(n)
    assert np.linalg.norm(h @ w - (w @ h @ w) * w) <= 1e-12


def test_ff_local_terms():
    terms, c = ff_local_terms(4)
    for p in terms:
        assert np.allclose(p @ w_state(4), 0)
        assert np.linalg.eigvalsh(p)[0] == pytest.approx(0)


def test_ff_n2_ground():
    w, v = np.linalg.eigh(ff_hamiltonian(2))
    assert abs(abs(v[:, 0] @ np.array([1, 1]) / np.sqrt(2)) - 1) < 1e-12


def test_gap_table(tmp_path):
    write_gap_table(tmp_path / "g.csv", [3], [1.0], [0.0, 1.0])
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "n,V,s,analytic,numeric"
    assert len(lines) == 3
