"""One-hot grid encoding of permutations and the 2-SAT clause view of the cost.

Variable x_{i,j} (row i, column j, both 1-based) is true when vertex i is sent
to vertex j. Every clause produced here is a pair of negated literals
``(~x_a | ~x_b)``, so a clause is represented by its two variables only.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .graphs import GiInstance, Permutation

FORWARD = "edge-mismatch-forward"
BACKWARD = "edge-mismatch-backward"
COLUMN = "column-conflict"
KINDS = (FORWARD, BACKWARD, COLUMN)


@dataclass(frozen=True)
class FunctionConfig:
    """Exactly one excitation per row: q[i-1] is the column of row i."""

    q: tuple

    def __post_init__(self):
        q = tuple(int(x) for x in self.q)
        if any(not 1 <= x <= len(q) for x in q):
            raise ValueError(f"config {q} has entries outside 1..{len(q)}")
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return len(self.q)

    def is_permutation(self) -> bool:
        return len(set(self.q)) == self.n

    def to_grid(self) -> "GridAssignment":
        bits = np.zeros((self.n, self.n), dtype=bool)
        bits[np.arange(self.n), np.array(self.q) - 1] = True
        return GridAssignment(bits)

    @classmethod
    def from_permutation(cls, pi: Permutation) -> "FunctionConfig":
        return cls(pi.mapping)


@dataclass(frozen=True, eq=False)
class GridAssignment:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[0] != bits.shape[1]:
            raise ValueError(f"grid must be n x n, got shape {bits.shape}")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return self.bits.shape[0]


class Clause(NamedTuple):
    a: tuple  # (row, column) of the first negated literal
    b: tuple
    kind: str


@dataclass(frozen=True)
class ClauseSet:
    n: int
    clauses: tuple

    def __len__(self):
        return len(self.clauses)

    def kind_counts(self) -> dict[str, int]:
        c = Counter(cl.kind for cl in self.clauses)
        return {k: c.get(k, 0) for k in KINDS}

    def literal_pairs(self) -> list[tuple[int, int]]:
        """Clauses as sorted pairs of DIMACS variable indices."""
        return [tuple(sorted((var_index(*cl.a, self.n), var_index(*cl.b, self.n)))) for cl in self.clauses]


def var_index(i: int, j: int, n: int) -> int:
    """DIMACS variable number of x_{i,j}: (i-1)*n + j."""
    return (i - 1) * n + j


def instance_hash(inst: GiInstance) -> str:
    blob = json.dumps(inst.to_json(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_2sat(inst: GiInstance) -> ClauseSet:
    n = inst.n
    a1, a2 = inst.g1.adjacency(), inst.g2.adjacency()
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    seen: dict[tuple, str] = {}

    def add(u, v, kind):
        key = (u, v) if u < v else (v, u)
        seen.setdefault(key, kind)

    for i, j in pairs:
        for k, l in pairs:
            e1, e2 = a1[i - 1, j - 1], a2[k - 1, l - 1]
            if e1 == e2:
                continue
            kind = FORWARD if e1 else BACKWARD
            add((i, k), (j, l), kind)
            add((i, l), (j, k), kind)
    for k in range(1, n + 1):
        for i, j in pairs:
            add((i, k), (j, k), COLUMN)
    order = {kind: r for r, kind in enumerate(KINDS)}
    clauses = sorted((Clause(u, v, kind) for (u, v), kind in seen.items()), key=lambda c: (order[c.kind], c.a, c.b))
    return ClauseSet(n, tuple(clauses))


def count_violated(bits: np.ndarray, cs: ClauseSet) -> int:
    """Clause-by-clause scan: a clause (~x_a | ~x_b) fails when both bits are set."""
    return sum(1 for c in cs.clauses if bits[c.a[0] - 1, c.a[1] - 1] and bits[c.b[0] - 1, c.b[1] - 1])


def eval_full_formula(a: GridAssignment, inst: GiInstance, cs: ClauseSet | None = None) -> tuple[bool, int]:
    """Evaluate the full n-SAT formula (2-literal clauses plus one row clause per row)."""
    if a.n != inst.n:
        raise ValueError(f"grid of size {a.n} for instance of size {inst.n}")
    cs = cs if cs is not None else build_2sat(inst)
    violated = count_violated(a.bits, cs) + int((~a.bits.any(axis=1)).sum())
    return violated == 0, violated


def diag_energy(q: FunctionConfig | Sequence[int], inst: GiInstance) -> int:
    """Violated 2-SAT clauses under the one-hot assignment of q.

    A row pair (i, j) contributes 1 if q_i == q_j (column conflict), or if
    q_i != q_j and the edge status of {i, j} in G1 differs from that of
    {q_i, q_j} in G2.
    """
    q = q.q if isinstance(q, FunctionConfig) else tuple(q)
    if len(q) != inst.n:
        raise ValueError(f"config of size {len(q)} for instance of size {inst.n}")
    a1, a2 = inst.g1.adjacency(), inst.g2.adjacency()
    e = 0
    for i, j in itertools.combinations(range(inst.n), 2):
        if q[i] == q[j]:
            e += 1
        elif a1[i, j] != a2[q[i] - 1, q[j] - 1]:
            e += 1
    return e


def witness_value(q: FunctionConfig | Sequence[int], inst: GiInstance) -> int:
    """Edge-mismatch clauses only (no column penalty)."""
    q = q.q if isinstance(q, FunctionConfig) else tuple(q)
    a1, a2 = inst.g1.adjacency(), inst.g2.adjacency()
    return sum(
        1
        for i, j in itertools.combinations(range(inst.n), 2)
        if q[i] != q[j] and a1[i, j] != a2[q[i] - 1, q[j] - 1]
    )


def config_digits(n: int) -> np.ndarray:
    """All n^n configs as a (n^n, n) array of 0-based columns.

    Row index is the little-endian mixed-radix number sum_i q_i n^(i-1)
    (chain 1 is the least significant digit).
    """
    dim = n**n
    idx = np.arange(dim, dtype=np.int64)
    out = np.empty((dim, n), dtype=np.int8)
    for i in range(n):
        out[:, i] = idx % n
        idx //= n
    return out


def energy_vectors(inst: GiInstance, digits: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(diag energy, witness) over every config, vectorised over row pairs."""
    n = inst.n
    digits = config_digits(n) if digits is None else digits
    a1, a2 = inst.g1.adjacency(), inst.g2.adjacency()
    energy = np.zeros(digits.shape[0], dtype=np.int32)
    witness = np.zeros(digits.shape[0], dtype=np.int32)
    for i, j in itertools.combinations(range(n), 2):
        di, dj = digits[:, i], digits[:, j]
        same = di == dj
        mism = (~same) & (a2[di, dj] != a1[i, j])
        energy += same
        energy += mism
        witness += mism
    return energy, witness


def emit_dimacs(cs: ClauseSet, path, inst: GiInstance | None = None, weighted: bool = False) -> None:
    """Write the clause set as DIMACS CNF (or WCNF with unit weights)."""
    nvars, m = cs.n * cs.n, len(cs)
    counts = cs.kind_counts()
    lines = []
    if inst is not None:
        lines.append(f"c instance {instance_hash(inst)}")
    lines.append("c variable x_{i,j} = (i-1)*n + j, n = %d" % cs.n)
    lines.append("c kinds " + " ".join(f"{k}={v}" for k, v in counts.items()))
    if weighted:
        lines.append(f"p wcnf {nvars} {m} {m + 1}")
        lines += [f"1 -{u} -{v} 0" for u, v in cs.literal_pairs()]
    else:
        lines.append(f"p cnf {nvars} {m}")
        lines += [f"-{u} -{v} 0" for u, v in cs.literal_pairs()]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_dimacs(path) -> tuple[int, list[tuple[int, ...]]]:
    """Return (number of variables, clauses as tuples of signed literals)."""
    nvars, clauses, weighted = None, [], False
    for line in Path(path).read_text().splitlines():
        tok = line.split()
        if not tok or tok[0] == "c":
            continue
        if tok[0] == "p":
            weighted = tok[1] == "wcnf"
            nvars = int(tok[2])
            continue
        lits = [int(x) for x in tok]
        if lits[-1] != 0:
            raise ValueError(f"clause line not terminated by 0: {line!r}")
        clauses.append(tuple(lits[1:-1] if weighted else lits[:-1]))
    if nvars is None:
        raise ValueError("missing problem line")
    return nvars, clauses
