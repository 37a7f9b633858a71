"""World-line quantum Monte Carlo annealer with the Permutation Trick.

An ensemble holds r Trotter slices of the n chain positions, periodic in
imaginary time. At schedule value nu the Hamiltonian is
nu * H_I + (1 - nu) * H_f and a configuration has weight

    prod_tau prod_i K(q_i^tau, q_i^(tau+1)) * prod_tau exp(-dtau (1 - nu) E(q^tau))

with K = exp(-dtau * nu * h_chain) the single-chain kinetic kernel and
dtau = beta / r.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from numba import njit

from .graphs import GiInstance, Permutation, cost_f, relabel_instance
from .hilbert import chain_hopping

RNG_CHUNK = 1 << 18


@dataclass(frozen=True)
class QmcParams:
    h: int = 5  # Permutation Trick attempts
    k: int = 4  # restarts per attempt
    r: int = 200  # Trotter slices
    m: int = 250  # Metropolis moves per schedule step
    beta: float | None = None  # None -> beta = r
    T: int = 100  # schedule length
    burn_in: int | None = None  # sweeps at nu = 1; None -> 100 * n
    seed: int = 0
    sweep_moves: bool = False  # a "move" is a full r*n-proposal sweep
    pt_mode: str = "pseudocode"  # "pseudocode": relabel both graphs; "prose": G2 only; "off"
    p_global: float = 0.0  # fraction of proposals that are whole-world-line swaps

    def __post_init__(self):
        for name in ("h", "k", "r", "m"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.T < 0:
            raise ValueError("T must be non-negative")
        if self.beta is not None and not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if not 0.0 <= self.p_global <= 1.0:
            raise ValueError("p_global must lie in [0, 1]")
        if self.pt_mode not in ("pseudocode", "prose", "off"):
            raise ValueError(f"unknown pt_mode {self.pt_mode!r}")

    @property
    def beta_value(self) -> float:
        return float(self.r if self.beta is None else self.beta)

    def burn_in_sweeps(self, n: int) -> int:
        return 100 * n if self.burn_in is None else self.burn_in

    @classmethod
    def preset(cls, name: str, **overrides) -> "QmcParams":
        presets = {
            "paper": dict(h=5, k=4, r=200, m=250, beta=None),
            "paper-beta-m": dict(h=5, k=4, r=200, m=250, beta=250.0),
        }
        if name not in presets:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(presets)}")
        return cls(**{**presets[name], **overrides})


def kinetic_kernel(n: int, nu: float, dtau: float) -> np.ndarray:
    """K = exp(-dtau * nu * h_chain), entrywise >= 0 by construction.

    exp(x A) with A the path adjacency and x = dtau * nu / 2 >= 0 is summed as
    a power series of a non-negative matrix (with scaling and squaring), so no
    entry can pick up a negative rounding error.
    """
    if nu < 0 or dtau < 0:
        raise ValueError("nu and dtau must be non-negative")
    x = dtau * nu / 2.0
    if x == 0:
        return np.eye(n)
    a = -2.0 * chain_hopping(n) * x  # non-negative
    squarings = max(0, int(math.ceil(math.log2(max(np.abs(a).sum(axis=1).max(), 1e-300)))) + 1)
    a = a / 2**squarings
    out = np.eye(n)
    term = np.eye(n)
    for j in range(1, 30):
        term = term @ a / j
        out = out + term
        if term.max() < 1e-18 * out.max():
            break
    for _ in range(squarings):
        out = out @ out
    return out


def kinetic_kernel_closed_form(n: int, nu: float, dtau: float) -> np.ndarray:
    """Same kernel through the sine eigenbasis of the path (reference only)."""
    j = np.arange(1, n + 1)
    u = np.sqrt(2 / (n + 1)) * np.sin(np.outer(j, j) * np.pi / (n + 1))
    lam = -np.cos(j * np.pi / (n + 1))
    return (u * np.exp(-dtau * nu * lam)) @ u.T


@njit(cache=True)
def _pair(i, j, qi, qj, a1, a2):
    if qi == qj:
        return 1
    return 1 if a1[i, j] != a2[qi, qj] else 0


@njit(cache=True)
def _slice_energy(q, a1, a2):
    n = q.shape[0]
    e = 0
    for i in range(n):
        for j in range(i + 1, n):
            e += _pair(i, j, q[i], q[j], a1, a2)
    return e


@njit(cache=True)
def _local(q, energy, a1, a2, K, diag_coef, tau, i, new, u):
    r, n = q.shape
    old = q[tau, i]
    if new == old:
        return 1
    if r == 1:
        num = K[new, new]
        den = K[old, old]
    else:
        prev = q[(tau - 1) % r, i]
        nxt = q[(tau + 1) % r, i]
        num = K[prev, new] * K[new, nxt]
        den = K[prev, old] * K[old, nxt]
    if num == 0.0:
        return 0
    de = 0
    for j in range(n):
        if j != i:
            qj = q[tau, j]
            de += _pair(i, j, new, qj, a1, a2) - _pair(i, j, old, qj, a1, a2)
    # a zero-weight current state (kinked world-line at nu = 0) always moves
    if den == 0.0 or u < (num / den) * math.exp(-diag_coef * de):
        q[tau, i] = new
        energy[tau] += de
        return 1
    return 0


@njit(cache=True)
def _swap(x, a, b):
    if x == a:
        return b
    if x == b:
        return a
    return x


@njit(cache=True)
def _global(q, energy, a1, a2, K, diag_coef, tau0, i, b, u, de_buf):
    # swap positions a <-> b along chain i's whole world-line, a = q[tau0, i]
    r, n = q.shape
    a = q[tau0, i]
    if a == b:
        return 1
    log_ratio = 0.0
    forced = False
    for tau in range(r):
        x, y = q[tau, i], q[(tau + 1) % r, i]
        if x != a and x != b and y != a and y != b:
            continue
        kn = K[_swap(x, a, b), _swap(y, a, b)]
        kd = K[x, y]
        if kn == 0.0:
            return 0
        if kd == 0.0:
            forced = True
        else:
            log_ratio += math.log(kn / kd)
    de_total = 0
    for tau in range(r):
        de_buf[tau] = 0
        x = q[tau, i]
        if x != a and x != b:
            continue
        y = _swap(x, a, b)
        de = 0
        for j in range(n):
            if j != i:
                qj = q[tau, j]
                de += _pair(i, j, y, qj, a1, a2) - _pair(i, j, x, qj, a1, a2)
        de_buf[tau] = de
        de_total += de
    log_ratio -= diag_coef * de_total
    if forced or log_ratio >= 0.0 or u < math.exp(log_ratio):
        for tau in range(r):
            q[tau, i] = _swap(q[tau, i], a, b)
            energy[tau] += de_buf[tau]
        return 1
    return 0


@njit(cache=True)
def _metropolis(q, energy, a1, a2, K, diag_coef, taus, chains, props, us, kinds, p_global):
    accepted = 0
    de_buf = np.zeros(q.shape[0], dtype=np.int64)
    for t in range(taus.shape[0]):
        if kinds[t] < p_global:
            accepted += _global(q, energy, a1, a2, K, diag_coef, taus[t], chains[t], props[t], us[t], de_buf)
        else:
            accepted += _local(q, energy, a1, a2, K, diag_coef, taus[t], chains[t], props[t], us[t])
    return accepted


@dataclass
class ReplicaEnsemble:
    """r Trotter slices; ``q[tau, i]`` is chain i's 0-based position in slice tau."""

    q: np.ndarray
    energy: np.ndarray
    a1: np.ndarray
    a2: np.ndarray

    @classmethod
    def uniform(cls, inst: GiInstance, r: int, position: int | None = None) -> "ReplicaEnsemble":
        n = inst.n
        pos = (n + 2) // 2 if position is None else position  # ceil((n+1)/2), 1-based
        a1 = inst.g1.adjacency().astype(np.int8)
        a2 = inst.g2.adjacency().astype(np.int8)
        q = np.full((r, n), pos - 1, dtype=np.int64)
        e = _slice_energy(q[0], a1, a2)
        return cls(q, np.full(r, e, dtype=np.int64), a1, a2)

    @property
    def r(self) -> int:
        return self.q.shape[0]

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def recompute_energy(self) -> np.ndarray:
        return np.array([_slice_energy(row, self.a1, self.a2) for row in self.q], dtype=np.int64)

    def zero_fraction(self) -> float:
        return float((self.energy == 0).mean())


def metropolis_move(
    ens: ReplicaEnsemble,
    nu: float,
    beta: float,
    rng: np.random.Generator,
    count: int = 1,
    K: np.ndarray | None = None,
    p_global: float = 0.0,
) -> int:
    """``count`` Metropolis proposals at fixed nu; updates ``ens`` in place.

    Each proposal picks a uniform (slice tau, chain i) and a uniform position b.
    With probability 1 - p_global it is a single-site move q_i^tau -> b; otherwise
    positions a = q_i^tau and b are swapped along the whole world-line of chain i.
    The second kind is needed for ergodicity when K is (close to) diagonal.
    Returns the number of accepted proposals.
    """
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"nu={nu} outside [0, 1]")
    dtau = beta / ens.r
    if K is None:
        K = kinetic_kernel(ens.n, nu, dtau)
    diag_coef = dtau * (1.0 - nu)
    acc = 0
    left = count
    while left > 0:
        c = min(left, RNG_CHUNK)
        taus = rng.integers(0, ens.r, c)
        chains = rng.integers(0, ens.n, c)
        props = rng.integers(0, ens.n, c)
        us = rng.random(c)
        kinds = rng.random(c) if p_global > 0 else np.ones(c)
        acc += _metropolis(ens.q, ens.energy, ens.a1, ens.a2, K, diag_coef, taus, chains, props, us, kinds, p_global)
        left -= c
    return acc


def permutation_trick(inst: GiInstance, sigma1: Permutation, sigma2: Permutation) -> GiInstance:
    """The relabeled instance (sigma1(G1), sigma2(G2))."""
    return relabel_instance(inst, sigma1, sigma2)


def map_back(pi: Permutation, sigma1: Permutation, sigma2: Permutation) -> Permutation:
    """Turn pi in Iso(sigma1(G1), sigma2(G2)) into sigma2^-1 o pi o sigma1 in Iso(G1, G2)."""
    return sigma2.inverse().compose(pi).compose(sigma1)


@dataclass
class QmcOutcome:
    solved: bool
    solving_slice_fraction: float
    attempts_used: tuple | None  # (i, j), 1-based, of the successful run
    runs: int
    wall_time: float
    solution: Permutation | None = None
    trace: list = field(default_factory=list)  # per-step min slice energy of the last run


def _run_schedule(ens, params, rng, trace):
    n, r = ens.n, ens.r
    beta = params.beta_value
    dtau = beta / r
    pg = params.p_global
    metropolis_move(ens, 1.0, beta, rng, params.burn_in_sweeps(n) * r * n, p_global=pg)
    per_step = params.m * (r * n if params.sweep_moves else 1)
    T = params.T
    trace.clear()
    for t in range(1, T + 1):
        nu = 1.0 - t / T
        metropolis_move(ens, nu, beta, rng, per_step, K=kinetic_kernel(n, nu, dtau), p_global=pg)
        trace.append(int(ens.energy.min()))


def qmc_solve(inst: GiInstance, params: QmcParams) -> QmcOutcome:
    """h Permutation-Trick attempts of k annealing runs each; first success wins.

    Success: at the end of the schedule at least ceil(r/6) slices carry a
    zero-cost configuration.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    n, r = inst.n, params.r
    need = math.ceil(r / 6)
    ident = Permutation.identity(n)
    runs = 0
    best_frac = 0.0
    trace: list = []
    for i in range(1, params.h + 1):
        if i == 1 or params.pt_mode == "off":
            s1, s2 = ident, ident
        elif params.pt_mode == "prose":
            s1, s2 = ident, Permutation.random(n, rng)
        else:
            s1, s2 = Permutation.random(n, rng), Permutation.random(n, rng)
        work = GiInstance(permutation_trick(inst, s1, s2).g1, permutation_trick(inst, s1, s2).g2)
        for j in range(1, params.k + 1):
            runs += 1
            ens = ReplicaEnsemble.uniform(work, r)
            _run_schedule(ens, params, rng, trace)
            zeros = int((ens.energy == 0).sum())
            best_frac = max(best_frac, zeros / r)
            if zeros >= need:
                tau = int(np.flatnonzero(ens.energy == 0)[0])
                pi_work = Permutation(tuple(int(x) + 1 for x in ens.q[tau]))
                sol = map_back(pi_work, s1, s2)
                assert cost_f(sol, inst) == 0
                return QmcOutcome(True, zeros / r, (i, j), runs, time.perf_counter() - t0, sol, list(trace))
    return QmcOutcome(False, best_frac, None, runs, time.perf_counter() - t0, None, list(trace))


# --- campaigns ----------------------------------------------------------------------

CAMPAIGN_COLUMNS = ["n", "instance_id", "T", "solved", "attempts", "i", "j", "wall_ms"]


def _campaign_seed(base: int, instance_id: int, T: int, tag: int = 0) -> int:
    ss = np.random.SeedSequence([base, instance_id, T, tag])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _campaign_job(args):
    inst, params = args
    return qmc_solve(inst, params)


@dataclass
class CampaignResult:
    rows: list
    T_n: int | None
    unsolved: list  # instance ids not solved at the largest ladder entry
    solved_counts: dict
    no_pt_failures: int | None = None

    def write_csv(self, path, timing: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CAMPAIGN_COLUMNS)
            for row in self.rows:
                row = dict(row)
                if not timing:
                    row["wall_ms"] = ""
                w.writerow([row[c] for c in CAMPAIGN_COLUMNS])

    def summary(self) -> dict:
        return {
            "T_n": self.T_n,
            "unsolved_at_max_T": self.unsolved,
            "solved_counts": {str(k): v for k, v in self.solved_counts.items()},
            "no_pt_failures": self.no_pt_failures,
        }


def annealing_time_campaign(
    instances: list[GiInstance],
    params: QmcParams,
    ladder: list[int],
    jobs: int = 1,
    stop_at_first: bool = True,
    no_pt_restarts: int = 0,
) -> CampaignResult:
    """Run every instance at each ladder T; T_n is the smallest T solving all.

    Run seeds derive from (params.seed, instance id, T) so results do not
    depend on ``jobs``. With ``no_pt_restarts`` > 0 the instances are rerun at
    T_n with that many restarts and no relabeling; the failure count is reported.
    """
    if not instances:
        raise ValueError("campaign needs at least one instance")
    rows = []
    T_n = None
    counts = {}
    unsolved: list = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        run = (lambda xs: list(pool.map(_campaign_job, xs))) if pool else (lambda xs: [_campaign_job(x) for x in xs])
        for T in sorted(ladder):
            tasks = [(inst, replace(params, T=int(T), seed=_campaign_seed(params.seed, idx, int(T)))) for idx, inst in enumerate(instances)]
            outs = run(tasks)
            for idx, (inst, out) in enumerate(zip(instances, outs)):
                rows.append(
                    {
                        "n": inst.n,
                        "instance_id": idx,
                        "T": int(T),
                        "solved": int(out.solved),
                        "attempts": out.runs,
                        "i": out.attempts_used[0] if out.solved else "",
                        "j": out.attempts_used[1] if out.solved else "",
                        "wall_ms": int(round(out.wall_time * 1000)),
                    }
                )
            counts[int(T)] = sum(o.solved for o in outs)
            unsolved = [idx for idx, o in enumerate(outs) if not o.solved]
            if not unsolved and T_n is None:
                T_n = int(T)
                if stop_at_first:
                    break
        no_pt = None
        if no_pt_restarts > 0 and T_n is not None:
            base = replace(params, T=T_n, h=1, k=no_pt_restarts, pt_mode="off")
            tasks = [(inst, replace(base, seed=_campaign_seed(params.seed, idx, T_n, 1))) for idx, inst in enumerate(instances)]
            no_pt = sum(not o.solved for o in run(tasks))
    finally:
        if pool:
            pool.shutdown()
    return CampaignResult(rows, T_n, unsolved, counts, no_pt)


def params_dict(params: QmcParams) -> dict:
    d = asdict(params)
    d["beta_value"] = params.beta_value
    return d
