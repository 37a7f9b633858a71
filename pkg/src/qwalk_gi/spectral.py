"""Lowest eigenpairs of H(s), gap sweeps, and the adiabatic time scale."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .graphs import GiInstance
from .hilbert import ScheduleHamiltonian, check_schedule

log = logging.getLogger(__name__)

DEGENERACY_THRESHOLD = 1e-8
DENSE_MAX_DIM = 4096
CHUNK = 8  # grid points per warm-started job; fixed so results do not depend on --jobs


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual=float("nan")):
        super().__init__(f"{msg} (best residual {residual:.3e})")
        self.residual = residual


def _orthonormalize(w, basis, deflate):
    # basis holds vectors as rows; a second Gram-Schmidt pass only when the
    # first one cancelled most of w
    for _ in range(2):
        before = np.linalg.norm(w)
        if basis is not None and len(basis):
            w = w - (basis @ w) @ basis
        for d in deflate:
            w = w - d * (d @ w)
        if np.linalg.norm(w) > 0.7 * before:
            break
    return w


def lanczos_lowest(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    start: np.ndarray | None = None,
    deflate: Sequence[np.ndarray] = (),
    tol: float = 1e-10,
    nev: int = 1,
    basis_size: int = 24,
    keep: int = 8,
    max_restarts: int = 1000,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Lowest ``nev`` eigenpairs of a real symmetric operator on the complement of ``deflate``.

    Thick-restart Lanczos with full reorthogonalisation: the projected matrix
    is formed explicitly from stored A*V rows, and on restart the ``keep``
    lowest Ritz vectors plus the residual direction seed the next Krylov
    extension. Returns (eigenvalues, vectors as rows, worst residual norm).
    """
    rng = np.random.default_rng(seed)
    basis_size = min(basis_size, dim - len(deflate))
    nev = min(nev, basis_size)
    keep = max(min(keep, basis_size - 1), nev)
    q = rng.standard_normal(dim) if start is None else np.array(start, dtype=np.float64)
    q = _orthonormalize(q, None, deflate)
    if np.linalg.norm(q) < 1e-12:
        q = _orthonormalize(rng.standard_normal(dim), None, deflate)
    q /= np.linalg.norm(q)

    def op(x):
        y = matvec(x)
        for d in deflate:
            y = y - d * (d @ y)
        return y

    V = np.zeros((basis_size, dim))
    AV = np.zeros((basis_size, dim))
    k = 0
    best = math.inf
    for _ in range(max_restarts):
        m = k
        for j in range(k, basis_size):
            V[j] = q
            AV[j] = op(q)
            m = j + 1
            if m == basis_size:
                break
            r = _orthonormalize(AV[j], V[:m], deflate)
            beta = np.linalg.norm(r)
            if beta < 1e-10 * max(1.0, np.linalg.norm(AV[j])):
                # invariant subspace reached: continue with a fresh direction
                r = _orthonormalize(rng.standard_normal(dim), V[:m], deflate)
                beta = np.linalg.norm(r)
            q = r / beta
        t = V[:m] @ AV[:m].T
        t = 0.5 * (t + t.T)
        theta, y = np.linalg.eigh(t)
        x = y[:, :nev].T @ V[:m]
        ax = y[:, :nev].T @ AV[:m]
        resid = ax - theta[:nev, None] * x
        res = np.linalg.norm(resid, axis=1)
        worst = float(res.max())
        best = min(best, worst)
        if worst <= tol:
            return theta[:nev].copy(), x, worst
        k = min(keep, m - 1)
        V[:k] = y[:, :k].T @ V[:m]
        AV[:k] = y[:, :k].T @ AV[:m]
        # continue from the residual of the least converged Ritz pair
        r = _orthonormalize(resid[int(np.argmax(res))], V[:k], deflate)
        nr = np.linalg.norm(r)
        if nr < 1e-300:
            r = _orthonormalize(rng.standard_normal(dim), V[:k], deflate)
            nr = np.linalg.norm(r)
        q = r / nr
    raise ConvergenceError(f"Lanczos did not converge in {max_restarts} restarts", best)


def _as_hamiltonian(inst_or_h) -> ScheduleHamiltonian:
    return inst_or_h if isinstance(inst_or_h, ScheduleHamiltonian) else ScheduleHamiltonian(inst_or_h)


def lowest_two(
    s: float,
    inst: GiInstance | ScheduleHamiltonian,
    tol: float = 1e-10,
    method: str = "auto",
    start: tuple | None = None,
    seed: int = 0,
    polish: bool = False,
):
    """(e0, v0, e1, v1) of H(s): the two smallest eigenvalues with orthonormal real vectors.

    ``method`` is "dense", "lanczos" or "auto" (dense up to DENSE_MAX_DIM).
    ``start`` optionally gives warm-start vectors (v0, v1). At s = 1 the
    operator is diagonal and the pairs are read off exactly. For s < 1 the
    ground state is non-degenerate (connected hopping graph, non-positive
    off-diagonals), so the two levels are found as one Lanczos cluster;
    ``polish`` re-solves e1 on the complement of v0.
    """
    check_schedule(s)
    h = _as_hamiltonian(inst)
    if h.fixed:
        raise ValueError("spectral analysis runs on the unmasked Hamiltonian")
    if method == "auto":
        method = "dense" if h.dim <= DENSE_MAX_DIM else "lanczos"
    if s == 1.0 and method == "lanczos":
        order = np.argsort(h.diag, kind="stable")[:2]
        v0, v1 = np.zeros(h.dim), np.zeros(h.dim)
        v0[order[0]] = v1[order[1]] = 1.0
        e0, e1 = float(h.diag[order[0]]), float(h.diag[order[1]])
    elif method == "dense":
        if h.dim < 2:
            raise ValueError("need at least two levels")
        w, v = scipy.linalg.eigh(h.dense(s), subset_by_index=[0, 1])
        e0, e1, v0, v1 = float(w[0]), float(w[1]), v[:, 0], v[:, 1]
    elif method == "lanczos":
        def mv(x):
            return h.apply(s, x)

        rng = np.random.default_rng(seed)
        q = rng.standard_normal(h.dim) * 1e-3
        if start is not None:
            q += start[0] + start[1]
        w, vecs, _ = lanczos_lowest(mv, h.dim, q, nev=2, tol=tol * 0.5, seed=seed)
        e0, v0, e1, v1 = float(w[0]), vecs[0], float(w[1]), vecs[1]
        if polish:
            q1 = v1 + 1e-4 * rng.standard_normal(h.dim)
            w1, vecs1, _ = lanczos_lowest(mv, h.dim, q1, deflate=[v0], tol=tol * 0.5, seed=seed + 1)
            e1, v1 = float(w1[0]), vecs1[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    for e, v in ((e0, v0), (e1, v1)):
        res = np.linalg.norm(h.apply(s, v) - e * v)
        if res > tol:
            raise ConvergenceError(f"eigenpair at s={s} misses tolerance {tol:g}", res)
    return e0, v0, e1, v1


@dataclass
class SpectralSweep:
    s: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    dh: np.ndarray  # |<v1|(H_f - H_I)|v0>| per point
    refined: np.ndarray  # True for points added by refinement
    v0: np.ndarray | None = None
    v1: np.ndarray | None = None
    threshold: float = DEGENERACY_THRESHOLD
    meta: dict = field(default_factory=dict)

    @property
    def gap(self) -> np.ndarray:
        return self.e1 - self.e0

    @property
    def degenerate(self) -> np.ndarray:
        return self.gap < self.threshold

    @property
    def g_min(self) -> float:
        return float(self.gap.min())

    @property
    def argmin(self) -> float:
        return float(self.s[int(np.argmin(self.gap))])

    @property
    def epsilon(self) -> float:
        ok = ~self.degenerate
        return float(self.dh[ok].max()) if ok.any() else float("nan")

    def summary(self) -> dict:
        out = {
            "g_min": self.g_min,
            "argmin": self.argmin,
            "epsilon": self.epsilon,
            "points": int(len(self.s)),
            "degenerate_points": int(self.degenerate.sum()),
        }
        try:
            out["time_estimate"] = annealing_time_estimate(self)
        except ValueError:
            out["time_estimate"] = None
        out.update(self.meta)
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "e0", "e1", "gap", "degenerate"])
            for s, e0, e1, g, d in zip(self.s, self.e0, self.e1, self.gap, self.degenerate):
                w.writerow([repr(float(s)), repr(float(e0)), repr(float(e1)), repr(float(g)), int(d)])

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _dh_element(h: ScheduleHamiltonian, v0, v1) -> float:
    return float(abs(v1 @ (h.apply_hf(v0) - h.apply_hi(v0))))


def _solve_points(args):
    inst, points, tol, method, keep_vectors = args
    h = ScheduleHamiltonian(inst)
    rows = []
    start = None
    for s in points:
        e0, v0, e1, v1 = lowest_two(s, h, tol=tol, method=method, start=start)
        start = (v0, v1)
        rows.append((s, e0, e1, _dh_element(h, v0, v1), v0 if keep_vectors else None, v1 if keep_vectors else None))
    return rows


def gap_sweep(
    inst: GiInstance,
    grid_size: int = 101,
    refine: bool = True,
    tol: float = 1e-10,
    method: str = "auto",
    retain_vectors: bool = False,
    jobs: int = 1,
    bracket_width: float = 1e-3,
) -> SpectralSweep:
    """Lowest two levels on a uniform grid in [0, 1], optionally refined around the minimum gap."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    grid = np.linspace(0.0, 1.0, grid_size)
    chunks = [(inst, list(grid[i : i + CHUNK]), tol, method, retain_vectors) for i in range(0, grid_size, CHUNK)]
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(_solve_points, chunks))
        else:
            parts = [_solve_points(c) for c in chunks]
    except ConvergenceError as exc:
        raise ConvergenceError(f"gap sweep failed: {exc}", exc.residual) from exc
    rows = [r for part in parts for r in part]
    flags = [False] * len(rows)

    if refine and grid_size >= 3:
        h = ScheduleHamiltonian(inst)
        gaps = np.array([r[2] - r[1] for r in rows])
        i = int(np.argmin(gaps))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_size - 1)]
        cache = {}
        start = (rows[i][4], rows[i][5]) if retain_vectors else None

        def gap_at(s):
            nonlocal start
            if s not in cache:
                try:
                    e0, v0, e1, v1 = lowest_two(s, h, tol=tol, method=method, start=start)
                except ConvergenceError as exc:
                    raise ConvergenceError(f"refinement at s={s}: {exc}", exc.residual) from exc
                start = (v0, v1)
                cache[s] = (s, e0, e1, _dh_element(h, v0, v1), v0 if retain_vectors else None, v1 if retain_vectors else None)
            return cache[s][2] - cache[s][1]

        invphi = (math.sqrt(5) - 1) / 2
        a, b = lo, hi
        c, d = b - invphi * (b - a), a + invphi * (b - a)
        while b - a > bracket_width:
            if gap_at(c) <= gap_at(d):
                b, d = d, c
                c = b - invphi * (b - a)
            else:
                a, c = c, d
                d = a + invphi * (b - a)
        gap_at(0.5 * (a + b))
        known = set(float(x) for x in grid)
        for s, row in sorted(cache.items()):
            if float(s) not in known:
                rows.append(row)
                flags.append(True)

    order = np.argsort([r[0] for r in rows], kind="stable")
    rows = [rows[k] for k in order]
    flags = np.array([flags[k] for k in order])
    sweep = SpectralSweep(
        s=np.array([r[0] for r in rows]),
        e0=np.array([r[1] for r in rows]),
        e1=np.array([r[2] for r in rows]),
        dh=np.array([r[3] for r in rows]),
        refined=flags,
    )
    if retain_vectors:
        sweep.v0 = np.array([r[4] for r in rows])
        sweep.v1 = np.array([r[5] for r in rows])
    return sweep


def epsilon_bound(inst: GiInstance, sweep: SpectralSweep) -> float:
    """max over non-degenerate grid points of |<v1| dH/ds |v0>| with dH/ds = H_f - H_I."""
    if sweep.v0 is None or sweep.v1 is None:
        raise ValueError("sweep was run without retain_vectors=True")
    h = ScheduleHamiltonian(inst)
    vals = []
    skipped = []
    for s, v0, v1, deg in zip(sweep.s, sweep.v0, sweep.v1, sweep.degenerate):
        if deg:
            skipped.append(float(s))
            continue
        vals.append(_dh_element(h, v0, v1))
    if skipped:
        log.warning("epsilon: skipped %d degenerate points %s", len(skipped), skipped)
    if not vals:
        raise ValueError("every sweep point is degenerate; epsilon is undefined")
    return float(max(vals))


def annealing_time_estimate(sweep: SpectralSweep, epsilon: float | None = None) -> float:
    """epsilon / g_min^2 (multiply by a safety factor for an actual run time)."""
    g = sweep.g_min
    if not g > sweep.threshold:
        raise ValueError(f"g_min={g:.3e} is below the degeneracy threshold; no time scale")
    eps = sweep.epsilon if epsilon is None else epsilon
    return float(eps / g**2)
