"""Schedule-driven Schrodinger evolution in the sector and the read-out protocol."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .graphs import GiInstance, Permutation, apply_permutation
from .hilbert import ScheduleHamiltonian

MAX_STEP_NORM = 0.5  # dt * ||H|| must stay below this
ABORT_DRIFT = 1e-6


class NormDriftError(RuntimeError):
    pass


def taylor_step(apply: Callable[[np.ndarray], np.ndarray], psi: np.ndarray, h: float, tol: float = 1e-12) -> np.ndarray:
    """exp(-i h H) psi by a Taylor series truncated once a term drops below tol * ||psi||."""
    out = psi.copy()
    term = psi
    scale = tol * np.linalg.norm(psi)
    for k in range(1, 60):
        term = apply(term) * (-1j * h / k)
        out += term
        if np.linalg.norm(term) <= scale:
            return out
    raise RuntimeError("Taylor series failed to converge; step too large")


def propagate(
    apply_s: Callable[[float, np.ndarray], np.ndarray],
    psi: np.ndarray,
    t0: float,
    t1: float,
    T: float,
    dt: float,
    tol: float = 1e-12,
    step: Callable[[float, np.ndarray, float], np.ndarray] | None = None,
) -> np.ndarray:
    """Integrate i dpsi/dt = H(t/T) psi from t0 to t1 with midpoint-frozen exponential steps.

    ``step(s, psi, h)`` may supply exp(-i h H(s)) psi directly; otherwise
    ``taylor_step`` is applied to ``apply_s``.
    """
    if t1 <= t0:
        return psi
    nsteps = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
    h = (t1 - t0) / nsteps
    for k in range(nsteps):
        s_mid = min(1.0, (t0 + (k + 0.5) * h) / T)
        if step is not None:
            psi = step(s_mid, psi, h)
        else:
            psi = taylor_step(lambda x: apply_s(s_mid, x), psi, h, tol)
    return psi


@dataclass
class EvolutionSpec:
    inst: GiInstance
    T: float
    dt: float | None = None  # default 0.05 / max(1, max diag)
    record_points: tuple = tuple(np.linspace(0.0, 1.0, 101))
    fixed: Mapping[int, int] = field(default_factory=dict)
    tol: float = 1e-12
    hamiltonian: ScheduleHamiltonian | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        h = self.hamiltonian or ScheduleHamiltonian(self.inst)
        if self.fixed != h.fixed:
            h = h.masked(self.fixed)
        self.hamiltonian = h
        if self.dt is None:
            self.dt = 0.05 / max(1.0, h.max_diag)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        # steps use H(s) - c(s), which only changes the global phase;
        # a step never needs to be longer than T itself
        bound = min(self.dt, self.T) * h.shifted_norm_bound()
        if bound > MAX_STEP_NORM:
            raise ValueError(f"dt*||H|| = {bound:.3f} exceeds {MAX_STEP_NORM}; reduce dt")
        pts = sorted(set(float(x) for x in self.record_points))
        if any(not 0.0 <= x <= 1.0 for x in pts):
            raise ValueError("record points must lie in [0, 1]")
        self.record_points = tuple(pts)


@dataclass
class Trace:
    s: np.ndarray
    witness: np.ndarray
    energy: np.ndarray
    solution_overlap: np.ndarray
    norm: np.ndarray

    @property
    def max_drift(self) -> float:
        return float(np.abs(self.norm - 1.0).max())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "witness", "energy", "solution_overlap", "norm"])
            for row in zip(self.s, self.witness, self.energy, self.solution_overlap, self.norm):
                w.writerow([repr(float(x)) for x in row])


def _observe(h: ScheduleHamiltonian, s: float, psi: np.ndarray, sol: np.ndarray):
    p = np.abs(psi) ** 2
    nrm = float(np.sqrt(p.sum()))
    energy = float(np.real(np.vdot(psi, h.apply(s, psi)))) / nrm**2
    return float(p @ h.witness) / nrm**2, energy, float(p[sol].sum()) / nrm**2, nrm


def evolve(spec: EvolutionSpec, psi0: np.ndarray | None = None) -> tuple[np.ndarray, Trace]:
    """Run the schedule s = t/T from the H_I ground state (masked if spec.fixed).

    The integrator propagates with H(s) - c(s), so the returned state differs
    from the exact one by a global phase only.
    """
    h = spec.hamiltonian

    def apply(s, x):
        return h.apply(s, x, h.shift(s))

    def step(s, x, dt):
        return h.exp_step(s, x, dt, spec.tol, h.shift(s))

    psi = h.ground_state() if psi0 is None else np.array(psi0, dtype=np.complex128)
    sol = h.solution_mask()
    T = spec.T
    rows = []
    t = 0.0
    for s_rec in spec.record_points:
        t_rec = s_rec * T
        psi = propagate(apply, psi, t, t_rec, T, spec.dt, spec.tol, step)
        t = max(t, t_rec)
        obs = _observe(h, s_rec, psi, sol)
        if abs(obs[3] - 1.0) > ABORT_DRIFT:
            raise NormDriftError(f"norm drift {abs(obs[3] - 1):.2e} at s={s_rec} (T={T}, dt={spec.dt})")
        rows.append((s_rec,) + obs)
    psi = propagate(apply, psi, t, T, T, spec.dt, spec.tol, step)
    arr = np.array(rows) if rows else np.zeros((0, 5))
    trace = Trace(*(arr[:, k] for k in range(5)))
    return psi, trace


def solution_overlap(psi: np.ndarray, h: ScheduleHamiltonian) -> float:
    p = np.abs(psi) ** 2
    return float(p[h.solution_mask()].sum() / p.sum())


def witness_expectation(psi: np.ndarray, inst: GiInstance | ScheduleHamiltonian) -> float:
    """<psi|C|psi> for the edge-mismatch observable C (no column penalty)."""
    h = inst if isinstance(inst, ScheduleHamiltonian) else ScheduleHamiltonian(inst)
    p = np.abs(psi) ** 2
    return float(p @ h.witness / p.sum())


def position_marginal(psi: np.ndarray, chain: int, n: int) -> np.ndarray:
    # Fortran-order reshape puts chain i on axis i-1
    p = (np.abs(psi) ** 2).reshape((n,) * n, order="F")
    axes = tuple(a for a in range(n) if a != chain - 1)
    return p.sum(axis=axes) if axes else p


def measure_position(psi: np.ndarray, chain: int, rng: np.random.Generator, n: int | None = None):
    """Projective measurement of chain ``chain``'s position.

    Returns (outcome in 1..n, probability of that outcome, collapsed normalised state).
    """
    if n is None:
        n = next(k for k in range(1, 13) if k**k == len(psi))
    marg = position_marginal(psi, chain, n)
    total = marg.sum()
    if total < 1e-12:
        raise ValueError("state has no weight to measure")
    probs = marg / total
    outcome = int(rng.choice(n, p=probs)) + 1
    idx = np.arange(len(psi))
    digit = (idx // n ** (chain - 1)) % n
    out = np.where(digit == outcome - 1, psi, 0)
    mass = np.linalg.norm(out)
    if mass < 1e-12:
        raise ValueError(f"zero marginal mass for chain {chain} outcome {outcome}")
    return outcome, float(probs[outcome - 1]), out / mass


@dataclass
class MeasurementRecord:
    outcomes: list = field(default_factory=list)  # (chain, position, probability)
    candidate: tuple | None = None
    is_permutation: bool = False
    verified: bool = False
    failure: str | None = None

    def to_json(self) -> dict:
        return {
            "outcomes": [{"chain": c, "position": q, "probability": p} for c, q, p in self.outcomes],
            "candidate": list(self.candidate) if self.candidate else None,
            "is_permutation": self.is_permutation,
            "verified": self.verified,
            "failure": self.failure,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def sequential_protocol(
    inst: GiInstance,
    T: float,
    rng: np.random.Generator | int | None = None,
    dt: float | None = None,
    rerun_T: float | None = None,
    hamiltonian: ScheduleHamiltonian | None = None,
) -> MeasurementRecord:
    """Evolve, measure chain 1, pin it, re-prepare the other chains, and repeat for chains 2..n.

    Every round restarts from the (masked) H_I ground state, so the total
    cost is n evolutions. ``rerun_T`` sets the time of rounds 2..n (default T).
    """
    rng = np.random.default_rng(rng)
    h = hamiltonian or ScheduleHamiltonian(inst)
    n = inst.n
    rec = MeasurementRecord()
    fixed: dict[int, int] = {}
    for chain in range(1, n + 1):
        T_round = T if chain == 1 or rerun_T is None else rerun_T
        spec = EvolutionSpec(inst, T_round, dt=dt, record_points=(), fixed=dict(fixed), hamiltonian=h)
        psi, _ = evolve(spec)
        q, p, _ = measure_position(psi, chain, rng, n)
        rec.outcomes.append((chain, q, p))
        fixed[chain] = q
    cand = tuple(fixed[c] for c in range(1, n + 1))
    rec.candidate = cand
    rec.is_permutation = len(set(cand)) == n
    if not rec.is_permutation:
        rec.failure = "candidate is not a permutation"
        return rec
    rec.verified = apply_permutation(Permutation(cand), inst.g1) == inst.g2
    if not rec.verified:
        rec.failure = "candidate does not map G1 onto G2"
    return rec
