"""Regenerate the bundled SRG edge lists from their standard constructions.

    python scripts/build_srg_catalog.py [outdir]

Petersen: Kneser graph K(5,2). Paley(q): x ~ y iff x - y is a nonzero square
mod q. Shrikhande: Cayley graph of Z4 x Z4 with connection set
{+-(1,0), +-(0,1), +-(1,1)}. Rook 4x4: cells sharing a row or a column.
Every file is validated against its (n,k,lambda,mu) before it is written.
"""

import itertools
import json
import sys
from pathlib import Path

from qwalk_gi.graphs import Graph, check_srg

OUT = Path(__file__).resolve().parents[1] / "src" / "qwalk_gi" / "data" / "srg"


def petersen():
    verts = list(itertools.combinations(range(5), 2))
    idx = {v: i + 1 for i, v in enumerate(verts)}
    edges = [(idx[a], idx[b]) for a, b in itertools.combinations(verts, 2) if not set(a) & set(b)]
    return Graph.from_edges(10, edges)


def paley(q):
    squares = {(x * x) % q for x in range(1, q)}
    edges = [(x + 1, y + 1) for x, y in itertools.combinations(range(q), 2) if (y - x) % q in squares]
    return Graph.from_edges(q, edges)


def shrikhande():
    cells = [(a, b) for a in range(4) for b in range(4)]
    conn = {(1, 0), (3, 0), (0, 1), (0, 3), (1, 1), (3, 3)}
    edges = []
    for (i, u), (j, v) in itertools.combinations(enumerate(cells, 1), 2):
        d = ((v[0] - u[0]) % 4, (v[1] - u[1]) % 4)
        if d in conn:
            edges.append((i, j))
    return Graph.from_edges(16, edges)


def rook4():
    cells = [(a, b) for a in range(4) for b in range(4)]
    edges = [
        (i, j)
        for (i, u), (j, v) in itertools.combinations(enumerate(cells, 1), 2)
        if u[0] == v[0] or u[1] == v[1]
    ]
    return Graph.from_edges(16, edges)


CATALOG = {
    "petersen": ((10, 3, 0, 1), petersen),
    "paley13": ((13, 6, 2, 3), lambda: paley(13)),
    "shrikhande": ((16, 6, 2, 2), shrikhande),
    "rook4x4": ((16, 6, 2, 2), rook4),
    "paley17": ((17, 8, 3, 4), lambda: paley(17)),
}


def main(outdir=OUT):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, (params, build) in CATALOG.items():
        g = build()
        check_srg(g, *params)
        data = {"name": name, "n": g.n, "params": list(params), "edges": [list(e) for e in g.sorted_edges()]}
        (outdir / f"{name}.json").write_text(json.dumps(data) + "\n")
        print(f"{name}: {params} m={g.m}")


if __name__ == "__main__":
    main(*sys.argv[1:])
