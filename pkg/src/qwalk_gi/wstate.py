"""Single-chain preparation of the walk ground state and the frustration-free W-state variant.

All operators act on the n-dimensional single-excitation sector of one chain
(basis |j> = excitation at site j, j = 1..n).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dynamics import propagate
from .hilbert import chain_ground, chain_hopping


def midpoint(n: int) -> int:
    return (n + 1) // 2


@dataclass(frozen=True)
class ChainPrepSpec:
    n: int
    V: float = 1.0
    T: float = 100.0
    dt: float = 0.05

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("chain needs at least two sites")
        if not self.V > 0:
            raise ValueError(f"pinning strength V must be positive, got {self.V}")
        if not self.T >= 0 or not self.dt > 0:
            raise ValueError("need T >= 0 and dt > 0")


def aux_initial(n: int, V: float) -> np.ndarray:
    """-(V/2)(1 + sigma^z) on the midpoint site, i.e. -V on |mid>."""
    h = np.zeros((n, n))
    h[midpoint(n) - 1, midpoint(n) - 1] = -V
    return h


def aux_hamiltonian(n: int, V: float, s: float) -> np.ndarray:
    return s * chain_hopping(n) + (1 - s) * aux_initial(n, V)


def aux_gap_analytic(n: int, V: float, s: float) -> float:
    """|cos(2pi/(n+1)) - sqrt(cos(pi/(n+1))^2 s^2 + ((1-s)V)^2)|."""
    if n < 2 or not 0 <= s <= 1 or not V > 0:
        raise ValueError("need n >= 2, 0 <= s <= 1, V > 0")
    c1, c2 = np.cos(np.pi / (n + 1)), np.cos(2 * np.pi / (n + 1))
    return float(abs(c2 - np.sqrt(c1**2 * s**2 + ((1 - s) * V) ** 2)))


def aux_gap_numeric(n: int, V: float, s: float) -> float:
    if n < 2 or not 0 <= s <= 1 or not V > 0:
        raise ValueError("need n >= 2, 0 <= s <= 1, V > 0")
    w = np.linalg.eigvalsh(aux_hamiltonian(n, V, s))
    return float(w[1] - w[0])


def write_gap_table(path, ns, Vs, ss) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "V", "s", "analytic", "numeric"])
        for n in ns:
            for V in Vs:
                for s in ss:
                    w.writerow([n, V, s, repr(aux_gap_analytic(n, V, s)), repr(aux_gap_numeric(n, V, s))])


def prepare_chain(spec: ChainPrepSpec, record: int = 101):
    """Anneal one chain from |mid> towards the walk ground state.

    Returns (final state, times, fidelities) where fidelity is
    |<sine profile|psi(t)>|^2 at ``record`` evenly spaced times.
    """
    n = spec.n
    _, target = chain_ground(n)
    psi = np.zeros(n, dtype=np.complex128)
    psi[midpoint(n) - 1] = 1.0
    times = np.linspace(0.0, spec.T, record)
    fid = np.empty(record)
    fid[0] = abs(np.vdot(target, psi)) ** 2
    if spec.T == 0:
        fid[:] = fid[0]
        return psi, times, fid
    h_i, h_f = aux_initial(n, spec.V), chain_hopping(n)

    def apply(s, x):
        return s * (h_f @ x) + (1 - s) * (h_i @ x)

    dt = min(spec.dt, 0.5 / max(1.0, spec.V))
    for k in range(1, record):
        psi = propagate(apply, psi, times[k - 1], times[k], spec.T, dt)
        drift = abs(np.linalg.norm(psi) - 1)
        if drift > 1e-6:
            raise RuntimeError(f"norm drift {drift:.2e} at t={times[k]}")
        fid[k] = abs(np.vdot(target, psi)) ** 2
    return psi, times, fid


def write_fidelity_trace(path, times, fid) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "fidelity"])
        for t, f in zip(times, fid):
            w.writerow([repr(float(t)), repr(float(f))])


# --- frustration-free variant ------------------------------------------------------


def ff_hamiltonian(n: int) -> np.ndarray:
    """-1/2 sum_j (XX + YY)_{j,j+1} - 1/2 (Z_1 + Z_n) in the single-excitation sector.

    XX + YY = 2 (s+s- + s-s+), so each bond hops with amplitude -1; the
    boundary fields give 1 - delta_{j,1} - delta_{j,n} on the diagonal.
    """
    h = 2.0 * chain_hopping(n)
    h += np.eye(n)
    h[0, 0] -= 1
    h[n - 1, n - 1] -= 1
    return h


def ff_local_terms(n: int) -> tuple[list[np.ndarray], float]:
    """Bond terms p_j = (|j> - |j+1>)(<j| - <j+1|) with ff_hamiltonian(n) = sum_j p_j + c I."""
    terms = []
    for j in range(n - 1):
        v = np.zeros(n)
        v[j], v[j + 1] = 1.0, -1.0
        terms.append(np.outer(v, v))
    return terms, -1.0


def w_state(n: int) -> np.ndarray:
    return np.full(n, 1 / np.sqrt(n))


def ff_ground_check(n: int, atol: float = 1e-12) -> bool:
    """W is an exact ground state of the FF Hamiltonian and minimises every local term."""
    if n < 2:
        raise ValueError("need n >= 2")
    h = ff_hamiltonian(n)
    w = w_state(n)
    e = float(w @ h @ w)
    if np.linalg.norm(h @ w - e * w) > atol:
        return False
    if abs(np.linalg.eigvalsh(h)[0] - e) > atol:
        return False
    terms, c = ff_local_terms(n)
    if not np.allclose(sum(terms) + c * np.eye(n), h, atol=atol, rtol=0):
        return False
    return all(abs(float(w @ p @ w) - np.linalg.eigvalsh(p)[0]) <= atol for p in terms)
