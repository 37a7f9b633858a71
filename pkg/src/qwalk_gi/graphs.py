"""Graphs, permutations and graph-isomorphism instances.

Vertices are labeled 1..n throughout. A permutation ``pi`` is stored as the
tuple ``(pi(1), ..., pi(n))``; applying it to a graph sends edge ``{v, w}``
to ``{pi(v), pi(w)}``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_BRUTE_FORCE_CAP = 9
CONNECTIVITY_RETRIES = 10_000


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"vertex count must be non-negative, got {self.n}")
        normed = set()
        for e in self.edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise ValueError(f"edge {(u, v)} has an endpoint outside 1..{self.n}")
            normed.add(_norm_edge(u, v))
        object.__setattr__(self, "edges", frozenset(normed))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        edges = [tuple(e) for e in edges]
        keys = [_norm_edge(*e) for e in edges]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate edge in edge list")
        return cls(n, frozenset(keys))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, frozenset(itertools.combinations(range(1, n + 1), 2)))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, frozenset())

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, i + 1) for i in range(1, n)))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls(n, frozenset(_norm_edge(i, i % n + 1) for i in range(1, n + 1)))

    @property
    def m(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def adjacency(self) -> np.ndarray:
        """0-based symmetric adjacency matrix as uint8."""
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        for u, v in self.edges:
            a[u - 1, v - 1] = a[v - 1, u - 1] = 1
        return a

    def has_edge(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in self.edges

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        nbrs = {v: [] for v in range(1, self.n + 1)}
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        seen = {1}
        stack = [1]
        while stack:
            for w in nbrs[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


@dataclass(frozen=True)
class Permutation:
    mapping: tuple

    def __post_init__(self):
        mapping = tuple(int(x) for x in self.mapping)
        if sorted(mapping) != list(range(1, len(mapping) + 1)):
            raise ValueError(f"{mapping} is not a bijection of 1..{len(mapping)}")
        object.__setattr__(self, "mapping", mapping)

    @property
    def n(self) -> int:
        return len(self.mapping)

    def __call__(self, v: int) -> int:
        return self.mapping[v - 1]

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(int(x) + 1 for x in rng.permutation(n)))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, p in enumerate(self.mapping, start=1):
            inv[p - 1] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """Return ``self o other`` (apply ``other`` first)."""
        if other.n != self.n:
            raise ValueError("permutation sizes differ")
        return Permutation(tuple(self(other(i)) for i in range(1, self.n + 1)))

    def matrix(self) -> np.ndarray:
        """P with P[pi(i), i] = 1 (0-based), so that P A P^T relabels A."""
        p = np.zeros((self.n, self.n), dtype=np.int64)
        for i, q in enumerate(self.mapping):
            p[q - 1, i] = 1
        return p


@dataclass(frozen=True)
class GiInstance:
    g1: Graph
    g2: Graph
    planted: Permutation | None = None

    def __post_init__(self):
        if self.g1.n != self.g2.n:
            raise ValueError(f"graph sizes differ: {self.g1.n} vs {self.g2.n}")
        if self.planted is not None:
            if self.planted.n != self.g1.n:
                raise ValueError("planted permutation has the wrong size")
            if apply_permutation(self.planted, self.g1) != self.g2:
                raise ValueError("planted permutation does not map g1 onto g2")

    @property
    def n(self) -> int:
        return self.g1.n

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "edges1": [list(e) for e in self.g1.sorted_edges()],
            "edges2": [list(e) for e in self.g2.sorted_edges()],
            "planted": list(self.planted.mapping) if self.planted else None,
        }

    @classmethod
    def from_json(cls, data: dict) -> "GiInstance":
        n = int(data["n"])
        planted = data.get("planted")
        return cls(
            Graph.from_edges(n, data["edges1"]),
            Graph.from_edges(n, data["edges2"]),
            Permutation(tuple(planted)) if planted is not None else None,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "GiInstance":
        return cls.from_json(json.loads(Path(path).read_text()))


def apply_permutation(pi: Permutation, g: Graph) -> Graph:
    if pi.n != g.n:
        raise ValueError(f"permutation of size {pi.n} applied to graph on {g.n} vertices")
    return Graph(g.n, frozenset(_norm_edge(pi(u), pi(v)) for u, v in g.edges))


def cost_f(pi: Permutation, inst: GiInstance) -> int:
    """Number of edges in pi(G1) but not in G2, plus those in G2 but not in pi(G1)."""
    if pi.n != inst.n:
        raise ValueError(f"permutation of size {pi.n} for instance of size {inst.n}")
    return len(apply_permutation(pi, inst.g1).edges ^ inst.g2.edges)


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise ValueError(
            f"brute-force enumeration refused for n={n} (cap {cap}; {n}! candidates)"
        )


def _iter_isomorphisms(a1: np.ndarray, a2: np.ndarray) -> Iterator[tuple[int, ...]]:
    # Depth-first over pi(1), pi(2), ... in increasing order, pruning any
    # partial map that already breaks an adjacency; yields in lexicographic order.
    n = a1.shape[0]
    if n == 0:
        yield ()
        return
    if int(a1.sum()) != int(a2.sum()):
        return
    deg1 = a1.sum(axis=1)
    deg2 = a2.sum(axis=1)
    assign = [-1] * n
    used = [False] * n

    def extend(i):
        if i == n:
            yield tuple(x + 1 for x in assign)
            return
        for c in range(n):
            if used[c] or deg1[i] != deg2[c]:
                continue
            if all(a1[i, j] == a2[c, assign[j]] for j in range(i)):
                assign[i] = c
                used[c] = True
                yield from extend(i + 1)
                used[c] = False
        assign[i] = -1

    yield from extend(0)


def brute_force_iso(inst: GiInstance, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> list[Permutation]:
    """All permutations in Iso(G1, G2), lexicographically ordered."""
    _check_cap(inst.n, cap)
    a1, a2 = inst.g1.adjacency(), inst.g2.adjacency()
    return [Permutation(p) for p in _iter_isomorphisms(a1, a2)]


def automorphism_count(g: Graph, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> int:
    _check_cap(g.n, cap)
    a = g.adjacency()
    return sum(1 for _ in _iter_isomorphisms(a, a))


def is_rigid(g: Graph, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> bool:
    _check_cap(g.n, cap)
    a = g.adjacency()
    it = _iter_isomorphisms(a, a)
    next(it)
    return next(it, None) is None


def edge_count_range(n: int, upper: int | None = None, lower: int | None = None) -> tuple[int, int]:
    """Edge-count range [2n, floor(n(n-2)/2)] used for random instances.

    ``upper``/``lower`` override the bounds (e.g. upper = n(n-1)/2).
    """
    lo = 2 * n if lower is None else int(lower)
    hi = n * (n - 2) // 2 if upper is None else int(upper)
    return lo, hi


def random_graph(n: int, m: int, rng: np.random.Generator) -> Graph:
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    if not 0 <= m <= len(pairs):
        raise ValueError(f"cannot place {m} edges on {n} vertices")
    idx = rng.choice(len(pairs), size=m, replace=False)
    return Graph(n, frozenset(pairs[i] for i in idx))


def random_instance(
    n: int,
    seed: int | np.random.Generator | None = None,
    *,
    upper: int | None = None,
    lower: int | None = None,
    max_retries: int = CONNECTIVITY_RETRIES,
) -> GiInstance:
    """Random isomorphic pair (G, pi(G)) with G connected and pi uniform."""
    lo, hi = edge_count_range(n, upper, lower)
    if n < 1 or lo > hi or lo < 0 or hi > n * (n - 1) // 2:
        raise ValueError(
            f"empty edge-count range [{lo}, {hi}] for n={n}; need n >= 6"
        )
    rng = np.random.default_rng(seed)
    m = int(rng.integers(lo, hi + 1))
    for _ in range(max_retries):
        g = random_graph(n, m, rng)
        if g.is_connected():
            break
    else:
        raise RuntimeError(f"no connected G({n},{m}) after {max_retries} draws")
    pi = Permutation.random(n, rng)
    return GiInstance(g, apply_permutation(pi, g), pi)


def random_rigid_instance(
    n: int, seed: int, lower: int | None = None, upper: int | None = None, max_tries: int = 10_000
) -> tuple[GiInstance, int]:
    """First instance with a rigid G1 from the seed stream seed, seed+1, ...

    The default edge range is [n, n(n-1)/2 - n]: the random-instance range
    [2n, n(n-2)/2] contains no rigid graph for n = 6 (the complement has at
    most 3 edges). Returns (instance, seed used).
    """
    lower = n if lower is None else lower
    upper = n * (n - 1) // 2 - n if upper is None else upper
    for s in range(seed, seed + max_tries):
        inst = random_instance(n, s, lower=lower, upper=upper)
        if is_rigid(inst.g1):
            return inst, s
    raise RuntimeError(f"no rigid graph found for n={n} in {max_tries} seeds")


# --- strongly regular graphs ----------------------------------------------------


@dataclass(frozen=True)
class SrgFamily:
    n: int
    k: int
    lam: int
    mu: int
    members: tuple = ()

    def __post_init__(self):
        for g in self.members:
            check_srg(g, self.n, self.k, self.lam, self.mu)

    @property
    def params(self) -> tuple[int, int, int, int]:
        return (self.n, self.k, self.lam, self.mu)


def check_srg(g: Graph, n: int, k: int, lam: int, mu: int) -> None:
    """Raise ValueError unless g is strongly regular with parameters (n,k,lam,mu)."""
    if g.n != n:
        raise ValueError(f"expected {n} vertices, got {g.n}")
    a = g.adjacency().astype(np.int64)
    deg = a.sum(axis=1)
    if not np.all(deg == k):
        raise ValueError(f"graph is not {k}-regular (degrees {sorted(set(deg.tolist()))})")
    common = a @ a
    off = ~np.eye(n, dtype=bool)
    adj = (a == 1) & off
    non = (a == 0) & off
    if adj.any() and not np.all(common[adj] == lam):
        raise ValueError(f"adjacent pairs do not all share {lam} neighbours")
    if non.any() and not np.all(common[non] == mu):
        raise ValueError(f"non-adjacent pairs do not all share {mu} neighbours")


def load_srg_file(path) -> tuple[tuple[int, int, int, int], Graph]:
    data = json.loads(Path(path).read_text())
    n, k, lam, mu = (int(x) for x in data["params"])
    g = Graph.from_edges(int(data["n"]), data["edges"])
    check_srg(g, n, k, lam, mu)
    return (n, k, lam, mu), g


def load_srg_catalog(paths: Iterable | None = None) -> list[SrgFamily]:
    """Group SRG edge-list files by parameters; defaults to the bundled catalog."""
    if paths is None:
        root = resources.files("qwalk_gi") / "data" / "srg"
        paths = sorted(p for p in root.iterdir() if p.name.endswith(".json"))
    grouped: dict[tuple, list[Graph]] = {}
    for p in paths:
        params, g = load_srg_file(p)
        grouped.setdefault(params, []).append(g)
    return [SrgFamily(*params, members=tuple(gs)) for params, gs in sorted(grouped.items())]


def srg_instances(
    family: SrgFamily, count: int, seed: int | np.random.Generator | None = None
) -> list[GiInstance]:
    if not family.members:
        raise ValueError("SRG family has no members")
    rng = np.random.default_rng(seed)
    out = []
    for g in family.members:
        for _ in range(count):
            pi = Permutation.random(g.n, rng)
            out.append(GiInstance(g, apply_permutation(pi, g), pi))
    return out


def relabel_instance(inst: GiInstance, sigma1: Permutation, sigma2: Permutation) -> GiInstance:
    """(sigma1(G1), sigma2(G2)); a planted map is carried over when present."""
    planted = None
    if inst.planted is not None:
        planted = sigma2.compose(inst.planted).compose(sigma1.inverse())
    return GiInstance(
        apply_permutation(sigma1, inst.g1), apply_permutation(sigma2, inst.g2), planted
    )
