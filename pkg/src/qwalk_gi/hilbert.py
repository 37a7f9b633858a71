"""Restricted-sector operators: n quantum walks on paths plus the clause potential.

A sector state is a complex vector of length n^n. Basis state |q> with
q = (q_1..q_n) sits at index sum_i (q_i - 1) n^(i-1), so chain 1 is the
least significant digit (see ``encoding.config_digits``).
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit

from .encoding import config_digits, energy_vectors
from .graphs import GiInstance

HARD_MAX_N = 12
DEFAULT_MAX_N = 10


def check_size(n: int, max_n: int = DEFAULT_MAX_N) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > HARD_MAX_N:
        raise ValueError(f"sector dimension {n}^{n} is out of reach; n must be <= {HARD_MAX_N}")
    if n > max_n:
        raise ValueError(f"n={n} exceeds the in-memory cap max_n={max_n} (sector dim {n}^{n})")


@dataclass(frozen=True)
class SectorIndex:
    n: int

    @property
    def dim(self) -> int:
        return self.n**self.n

    def index(self, q: Sequence[int]) -> int:
        if len(q) != self.n:
            raise ValueError("config length does not match n")
        return sum((int(x) - 1) * self.n**i for i, x in enumerate(q))

    def config(self, idx: int) -> tuple[int, ...]:
        if not 0 <= idx < self.dim:
            raise IndexError(idx)
        out = []
        for _ in range(self.n):
            idx, d = divmod(idx, self.n)
            out.append(d + 1)
        return tuple(out)


def chain_hopping(n: int) -> np.ndarray:
    """Single-chain walk: -1/2 on the path's nearest-neighbour pairs."""
    h = np.zeros((n, n))
    i = np.arange(n - 1)
    h[i, i + 1] = h[i + 1, i] = -0.5
    return h


def chain_ground(n: int) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of ``chain_hopping(n)``: -cos(pi/(n+1)), sin(j pi/(n+1))."""
    j = np.arange(1, n + 1)
    v = np.sin(j * np.pi / (n + 1))
    return -np.cos(np.pi / (n + 1)), v / np.linalg.norm(v)


def _chain_term(n: int, chain: int, op) -> sp.csr_matrix:
    # chain is 1-based; kron puts the first factor in the most significant digit
    left = sp.identity(n ** (n - chain), format="csr")
    right = sp.identity(n ** (chain - 1), format="csr")
    return sp.kron(left, sp.kron(op, right, format="csr"), format="csr")


@functools.lru_cache(maxsize=8)
def hi_matrix(n: int, frozen: frozenset = frozenset()) -> sp.csr_matrix:
    """Sparse H_I on the sector, omitting hops on the chains in ``frozen``."""
    check_size(n)
    h = sp.csr_matrix(chain_hopping(n))
    out = sp.csr_matrix((n**n, n**n))
    for i in range(1, n + 1):
        if i not in frozen:
            out = out + _chain_term(n, i, h)
    out.sum_duplicates()
    out.eliminate_zeros()
    return out.tocsr()


def _matvec(mat: sp.csr_matrix, psi: np.ndarray) -> np.ndarray:
    # real matrix on a complex vector without complex upcasting of the matrix
    if np.iscomplexobj(psi):
        pr = np.ascontiguousarray(psi).view(np.float64).reshape(-1, 2)
        return np.ascontiguousarray(mat @ pr).view(np.complex128).ravel()
    return mat @ psi


@njit(cache=True)
def _hop_kernel(psi, out, n, free, a):
    # out += a * H_I psi, chain c (0-based) being digit c with stride n^c
    dim = psi.shape[0]
    st = 1
    for c in range(n):
        if free[c]:
            block = st * n
            for b0 in range(0, dim, block):
                for d in range(n):
                    base = b0 + d * st
                    if d > 0:
                        for k in range(st):
                            out[base + k] -= 0.5 * a * psi[base + k - st]
                    if d < n - 1:
                        for k in range(st):
                            out[base + k] -= 0.5 * a * psi[base + k + st]
        st *= n


@njit(cache=True)
def _taylor_kernel(psi, dvec, a, n, free, keep, h, tol):
    # exp(-i h H) psi with H = diag(dvec) + a * H_I restricted to ``keep``
    out = psi.copy()
    term = psi.copy()
    tmp = np.empty_like(psi)
    scale = tol * np.sqrt(np.sum(np.abs(psi) ** 2))
    for k in range(1, 60):
        for i in range(psi.shape[0]):
            tmp[i] = dvec[i] * term[i]
        _hop_kernel(term, tmp, n, free, a)
        c = -1j * h / k
        nrm2 = 0.0
        for i in range(psi.shape[0]):
            v = c * tmp[i] if keep[i] else 0.0j
            term[i] = v
            out[i] += v
            nrm2 += v.real * v.real + v.imag * v.imag
        if np.sqrt(nrm2) <= scale:
            return out, k
    return out, -1


def _n_from_dim(dim: int) -> int:
    for n in range(1, HARD_MAX_N + 1):
        if n**n == dim:
            return n
    raise ValueError(f"vector length {dim} is not n^n for any n <= {HARD_MAX_N}")


def fixed_mask(n: int, fixed: Mapping[int, int]) -> np.ndarray:
    """Boolean mask of basis states whose digits agree with ``fixed`` (chain -> position)."""
    digits = config_digits(n)
    keep = np.ones(n**n, dtype=bool)
    for chain, pos in fixed.items():
        keep &= digits[:, chain - 1] == pos - 1
    return keep


class ScheduleHamiltonian:
    """H(s) = (1 - s) H_I + s H_f for one instance, with the diagonal cached.

    ``fixed`` maps measured chains to their positions; hops on those chains
    are dropped and results are projected onto the matching digits.
    """

    def __init__(self, inst: GiInstance, fixed: Mapping[int, int] | None = None, max_n: int = DEFAULT_MAX_N):
        check_size(inst.n, max_n)
        self.inst = inst
        self.n = inst.n
        self.dim = self.n**self.n
        energy, witness = energy_vectors(inst)
        self.energy = energy
        self.witness = witness
        self.diag = energy.astype(np.float64)
        self.fixed = dict(fixed or {})
        for chain, pos in self.fixed.items():
            if not (1 <= chain <= self.n and 1 <= pos <= self.n):
                raise ValueError(f"bad fixed entry chain {chain} -> {pos}")
        self.hi = hi_matrix(self.n, frozenset(self.fixed))
        self.mask = fixed_mask(self.n, self.fixed) if self.fixed else None
        self._free = np.array([c not in self.fixed for c in range(1, self.n + 1)])

    def masked(self, fixed: Mapping[int, int]) -> "ScheduleHamiltonian":
        new = object.__new__(ScheduleHamiltonian)
        new.__dict__.update(self.__dict__)
        new.fixed = dict(fixed)
        new.hi = hi_matrix(self.n, frozenset(new.fixed))
        new.mask = fixed_mask(self.n, new.fixed) if new.fixed else None
        new._free = np.array([c not in new.fixed for c in range(1, self.n + 1)])
        return new

    @property
    def max_diag(self) -> float:
        return float(self.diag.max())

    def norm_bound(self, s: float | None = None) -> float:
        """Upper bound on ||H(s)||; the max over s when s is None."""
        hi_norm = self.n * np.cos(np.pi / (self.n + 1))
        if s is None:
            return max(hi_norm, self.max_diag)
        return (1 - s) * hi_norm + s * self.max_diag

    def shift(self, s: float) -> float:
        """Energy offset c(s) = s * max_diag / 2 centring the diagonal part."""
        return s * self.max_diag / 2

    def shifted_norm_bound(self, s: float | None = None) -> float:
        """Upper bound on ||H(s) - c(s)||; the max over s when s is None."""
        hi_norm = self.n * np.cos(np.pi / (self.n + 1))
        if s is None:
            return max(hi_norm, self.max_diag / 2)
        return (1 - s) * hi_norm + s * self.max_diag / 2

    def solution_mask(self) -> np.ndarray:
        return self.energy == 0

    def apply_hi(self, psi: np.ndarray) -> np.ndarray:
        out = _matvec(self.hi, psi)
        if self.mask is not None:
            out[~self.mask] = 0
        return out

    def apply_hf(self, psi: np.ndarray) -> np.ndarray:
        out = self.diag * psi
        if self.mask is not None:
            out[~self.mask] = 0
        return out

    def apply(self, s: float, psi: np.ndarray, shift: float = 0.0) -> np.ndarray:
        """(H(s) - shift) psi."""
        check_schedule(s)
        psi = np.ascontiguousarray(psi, dtype=np.complex128 if np.iscomplexobj(psi) else np.float64)
        out = (s * self.diag - shift) * psi
        _hop_kernel(psi, out, self.n, self._free, 1.0 - s)
        if self.mask is not None:
            out[~self.mask] = 0
        return out

    def exp_step(self, s: float, psi: np.ndarray, h: float, tol: float = 1e-12, shift: float = 0.0) -> np.ndarray:
        """exp(-i h (H(s) - shift)) psi by a fused truncated Taylor series."""
        check_schedule(s)
        keep = self.mask if self.mask is not None else np.ones(self.dim, dtype=bool)
        psi = np.ascontiguousarray(psi, dtype=np.complex128)
        out, k = _taylor_kernel(psi, s * self.diag - shift, 1.0 - s, self.n, self._free, keep, h, tol)
        if k < 0:
            raise RuntimeError("Taylor series failed to converge; step too large")
        return out

    def sparse(self, s: float) -> sp.csr_matrix:
        check_schedule(s)
        mat = (1 - s) * self.hi + sp.diags(s * self.diag)
        if self.mask is not None:
            p = sp.diags(self.mask.astype(np.float64))
            mat = p @ mat @ p
        return sp.csr_matrix(mat)

    def dense(self, s: float) -> np.ndarray:
        return self.sparse(s).toarray()

    def ground_state(self) -> np.ndarray:
        return hi_ground_state(self.n, self.fixed)


def check_schedule(s: float) -> None:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"schedule parameter s={s} outside [0, 1]")


def apply_hi(psi: np.ndarray) -> np.ndarray:
    n = _n_from_dim(len(psi))
    return _matvec(hi_matrix(n), psi)


def apply_h(s: float, psi: np.ndarray, inst: GiInstance) -> np.ndarray:
    return ScheduleHamiltonian(inst).apply(s, psi)


def apply_h_masked(s: float, psi: np.ndarray, inst: GiInstance, fixed: Mapping[int, int]) -> np.ndarray:
    return ScheduleHamiltonian(inst, fixed).apply(s, psi)


def hi_ground_energy(n: int, n_free: int | None = None) -> float:
    n_free = n if n_free is None else n_free
    return -n_free * np.cos(np.pi / (n + 1))


def hi_ground_state(n: int, fixed: Mapping[int, int] | None = None) -> np.ndarray:
    """Product of per-chain ground vectors; chains in ``fixed`` are pinned."""
    check_size(n)
    fixed = fixed or {}
    _, g = chain_ground(n)
    psi = np.ones(1)
    # build from chain n (most significant) down to chain 1
    for chain in range(n, 0, -1):
        if chain in fixed:
            v = np.zeros(n)
            v[fixed[chain] - 1] = 1.0
        else:
            v = g
        psi = np.kron(psi, v)
    return psi.astype(np.complex128)


# --- full qubit-grid checks (tiny n) ------------------------------------------


def _full_space_ops(n: int):
    sz = np.diag([1.0, -1.0])  # |up> = index 0
    splus = np.array([[0.0, 1.0], [0.0, 0.0]])  # |up><down|
    nq = n * n

    def site(op, i, j):
        k = (i - 1) * n + (j - 1)  # qubit order: row-major over the grid
        return sp.kron(sp.kron(sp.identity(2**k), sp.csr_matrix(op)), sp.identity(2 ** (nq - k - 1)), format="csr")

    return sz, splus, site


def full_space_hi(n: int) -> sp.csr_matrix:
    """H_I on the full 2^(n^2) qubit grid in sigma^+/sigma^- form."""
    _, splus, site = _full_space_ops(n)
    sminus = splus.T
    h = sp.csr_matrix((2 ** (n * n), 2 ** (n * n)))
    for i in range(1, n + 1):
        for j in range(1, n):
            h = h + site(splus, i, j + 1) @ site(sminus, i, j) + site(splus, i, j) @ site(sminus, i, j + 1)
    return (-0.5 * h).tocsr()


def number_operator(n: int, chain: int) -> sp.csr_matrix:
    sz, _, site = _full_space_ops(n)
    eye = sp.identity(2 ** (n * n), format="csr")
    out = sp.csr_matrix((2 ** (n * n), 2 ** (n * n)))
    for j in range(1, n + 1):
        out = out + 0.5 * (eye + site(sz, chain, j))
    return out.tocsr()


def sector_embedding(n: int) -> np.ndarray:
    """Full-space basis index of each sector config (qubit (i,q_i) up, rest down)."""
    out = np.empty(n**n, dtype=np.int64)
    nq = n * n
    for idx, q in enumerate(SectorIndex(n).config(k) for k in range(n**n)):
        bits = [1] * nq  # 1 = down
        for i, qi in enumerate(q, start=1):
            bits[(i - 1) * n + qi - 1] = 0
        out[idx] = int("".join(map(str, bits)), 2)
    return out


def number_conservation_check(n: int) -> bool:
    """[N_i, H_I] = 0 on the full grid, and the N_i = 1 block of H_I equals the sector H_I."""
    if n > 3:
        raise ValueError(f"full-space check needs 2^(n^2) states; refused for n={n} > 3")
    h = full_space_hi(n)
    for i in range(1, n + 1):
        num = number_operator(n, i)
        comm = num @ h - h @ num
        if comm.count_nonzero() and abs(comm).max() != 0:
            return False
    emb = sector_embedding(n)
    block = h[emb][:, emb].toarray()
    return bool(np.array_equal(block, hi_matrix(n).toarray()))


def stoquastic_check(s: float, inst: GiInstance) -> bool:
    """True iff every off-diagonal element of H(s) is <= 0."""
    check_schedule(s)
    mat = ScheduleHamiltonian(inst).sparse(s).tocoo()
    off = mat.row != mat.col
    return bool(np.all(mat.data[off] <= 0))
