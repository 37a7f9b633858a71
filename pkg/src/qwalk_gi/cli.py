"""Command-line harness: ``qwalk-gi <command> [options]``.

Every command accepts ``--config file.json``; keys are the option names
(dashes or underscores) and explicit flags override them. Output files carry
the hash of the resolved configuration and the seed.

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure,
4 instance unsolved.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics, encoding, graphs, qmc, spectral, wstate

CONFIG_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_UNSOLVED = 0, 2, 3, 4
# options that never change results and so stay out of the config hash
_UNHASHED = {"config", "out", "jobs", "plot_data", "timing", "command"}


class ConfigError(ValueError):
    pass


class Unsolved(Exception):
    pass


# --- shared helpers ------------------------------------------------------------------


def config_hash(cfg: dict) -> str:
    blob = json.dumps({k: v for k, v in cfg.items() if k not in _UNHASHED}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _meta(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "seed": cfg.get("seed"), "config_version": CONFIG_VERSION}


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")


def _stamp_csv(path: Path, cfg: dict) -> None:
    """Prefix a CSV with a ``#`` comment line holding the config hash and seed."""
    m = _meta(cfg)
    body = path.read_text()
    path.write_text(f"# config_hash={m['config_hash']} seed={m['seed']}\n" + body)


def _write_long_csv(path: Path, header: list[str], rows, cfg: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    _stamp_csv(path, cfg)


def instance_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint32)[0])


def generate_instances(n: int, count: int, seed: int) -> list[tuple[int, graphs.GiInstance]]:
    out = []
    for i in range(count):
        s = instance_seed(seed, i)
        out.append((s, graphs.random_instance(n, s)))
    return out


def _load_instances(paths: list[str]) -> list[graphs.GiInstance]:
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(f for f in p.glob("*.json") if f.name != "manifest.json")
        else:
            files.append(p)
    if not files:
        raise ConfigError("no instance files given")
    return [graphs.GiInstance.load(f) for f in files]


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands ------------------------------------------------------------------------


def cmd_gen(cfg: dict) -> int:
    n, count, seed = cfg["n"], cfg["count"], cfg["seed"]
    if count < 1:
        raise ConfigError("count must be positive")
    try:
        graphs.edge_count_range(n)
        insts = generate_instances(n, count, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _out_dir(cfg)
    entries = []
    for i, (s, inst) in enumerate(insts):
        name = f"instance_{i:03d}.json"
        inst.save(out / name)
        entries.append({"file": name, "seed": s, "m": inst.g1.m, "hash": encoding.instance_hash(inst)})
    _write_json(out / "manifest.json", {**_meta(cfg), "n": n, "count": count, "instances": entries})
    print(f"wrote {count} instances to {out}")
    return EXIT_OK


def _satisfiable(inst: graphs.GiInstance, cs: encoding.ClauseSet) -> bool:
    n = inst.n
    for row in encoding.config_digits(n):
        grid = encoding.FunctionConfig(tuple(int(x) + 1 for x in row)).to_grid()
        ok, _ = encoding.eval_full_formula(grid, inst, cs)
        if ok:
            return True
    return False


def cmd_encode(cfg: dict) -> int:
    inst = graphs.GiInstance.load(cfg["instance"])
    cs = encoding.build_2sat(inst)
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    encoding.emit_dimacs(cs, out, inst, weighted=cfg["weighted"])
    for kind, c in cs.kind_counts().items():
        print(f"{kind}: {c}")
    print(f"clauses: {len(cs)}")
    if cfg["check"]:
        if inst.n > 5:
            raise ConfigError("--check enumerates n^n configurations; use n <= 5")
        print("satisfiable" if _satisfiable(inst, cs) else "unsatisfiable")
    return EXIT_OK


def cmd_spectrum(cfg: dict) -> int:
    inst = graphs.GiInstance.load(cfg["instance"])
    sweep = spectral.gap_sweep(
        inst, grid_size=cfg["grid"], refine=cfg["refine"], tol=cfg["tol"], method=cfg["method"], jobs=cfg["jobs"]
    )
    sweep.meta.update(_meta(cfg))
    sweep.meta["instance"] = encoding.instance_hash(inst)
    out = _out_dir(cfg)
    sweep.write_csv(out / "spectrum.csv")
    _stamp_csv(out / "spectrum.csv", cfg)
    sweep.write_summary(out / "summary.json")
    if cfg["plot_data"]:
        rows = [(name, repr(float(s)), repr(float(v))) for name, arr in (("e0", sweep.e0), ("e1", sweep.e1), ("gap", sweep.gap)) for s, v in zip(sweep.s, arr)]
        _write_long_csv(out / "plot_data.csv", ["series", "s", "value"], rows, cfg)
    print(f"g_min={sweep.g_min:.6g} at s={sweep.argmin:.6g}, epsilon={sweep.epsilon:.6g}")
    return EXIT_OK


def ladder_values(T: float, ladder: int) -> list[float]:
    """``ladder`` times halving down from T: T/2^(ladder-1), ..., T/2, T."""
    if ladder < 1:
        raise ConfigError("ladder must be >= 1")
    return [T / 2 ** k for k in range(ladder - 1, -1, -1)]


def _evolve_one(args):
    inst, T, dt, points = args
    spec = dynamics.EvolutionSpec(inst, T, dt=dt, record_points=tuple(np.linspace(0, 1, points)))
    _, trace = dynamics.evolve(spec)
    return trace


def cmd_evolve(cfg: dict) -> int:
    inst = graphs.GiInstance.load(cfg["instance"])
    if not cfg["T"] > 0:
        raise ConfigError("T must be positive")
    Ts = ladder_values(cfg["T"], cfg["ladder"])
    tasks = [(inst, T, cfg["dt"], cfg["points"]) for T in Ts]
    try:
        if cfg["jobs"] > 1:
            with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
                traces = list(pool.map(_evolve_one, tasks))
        else:
            traces = [_evolve_one(t) for t in tasks]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _out_dir(cfg)
    summary = []
    long_rows = []
    for T, tr in zip(Ts, traces):
        name = f"trace_T{T:g}.csv"
        tr.write_csv(out / name)
        _stamp_csv(out / name, cfg)
        summary.append({"T": T, "file": name, "final_overlap": float(tr.solution_overlap[-1]), "max_drift": tr.max_drift})
        for s, w, e, o in zip(tr.s, tr.witness, tr.energy, tr.solution_overlap):
            long_rows += [(repr(T), repr(float(s)), k, repr(float(v))) for k, v in (("witness", w), ("energy", e), ("solution_overlap", o))]
        print(f"T={T:g}: final overlap {tr.solution_overlap[-1]:.6f}, drift {tr.max_drift:.1e}")
    _write_json(out / "summary.json", {**_meta(cfg), "instance": encoding.instance_hash(inst), "runs": summary})
    if cfg["plot_data"]:
        _write_long_csv(out / "plot_data.csv", ["T", "s", "observable", "value"], long_rows, cfg)
    return EXIT_OK


def _protocol_one(args):
    inst, T, dt, seed = args
    return dynamics.sequential_protocol(inst, T, np.random.default_rng(seed), dt=dt)


def cmd_protocol(cfg: dict) -> int:
    inst = graphs.GiInstance.load(cfg["instance"])
    if cfg["runs"] < 1 or not cfg["T"] > 0:
        raise ConfigError("need runs >= 1 and T > 0")
    seeds = [instance_seed(cfg["seed"], i) for i in range(cfg["runs"])]
    tasks = [(inst, cfg["T"], cfg["dt"], s) for s in seeds]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            recs = list(pool.map(_protocol_one, tasks))
    else:
        recs = [_protocol_one(t) for t in tasks]
    verified = sum(r.verified for r in recs)
    out = _out_dir(cfg)
    _write_json(
        out / "protocol.json",
        {
            **_meta(cfg),
            "instance": encoding.instance_hash(inst),
            "verified": verified,
            "runs": [{"seed": s, **r.to_json()} for s, r in zip(seeds, recs)],
        },
    )
    print(f"verified {verified}/{len(recs)}")
    if verified == 0:
        raise Unsolved("no run returned a verified isomorphism")
    return EXIT_OK


def _qmc_params(cfg: dict) -> qmc.QmcParams:
    fields = {k: cfg[k] for k in ("h", "k", "r", "m", "beta", "burn_in", "sweep_moves", "pt_mode", "p_global") if cfg.get(k) is not None}
    fields["seed"] = cfg["seed"]
    try:
        if cfg.get("preset"):
            return qmc.QmcParams.preset(cfg["preset"], **fields)
        return qmc.QmcParams(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_qmc(cfg: dict) -> int:
    params = _qmc_params(cfg)
    if cfg["instances"]:
        insts = _load_instances(cfg["instances"])
    elif cfg["n"] is not None:
        try:
            insts = [inst for _, inst in generate_instances(cfg["n"], cfg["count"], cfg["seed"])]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        raise ConfigError("give --instances or --n/--count")
    ladder = [int(x) for x in cfg["ladder"]]
    if not ladder or min(ladder) < 0:
        raise ConfigError("ladder must be a non-empty list of non-negative integers")
    res = qmc.annealing_time_campaign(
        insts, params, ladder, jobs=cfg["jobs"], stop_at_first=not cfg["full_ladder"], no_pt_restarts=cfg["no_pt_restarts"]
    )
    out = _out_dir(cfg)
    res.write_csv(out / "campaign.csv", timing=cfg["timing"])
    _stamp_csv(out / "campaign.csv", cfg)
    _write_json(out / "summary.json", {**_meta(cfg), "params": qmc.params_dict(params), **res.summary()})
    if cfg["plot_data"]:
        rows = [(insts[0].n, T, c, len(insts)) for T, c in sorted(res.solved_counts.items())]
        _write_long_csv(out / "plot_data.csv", ["n", "T", "solved", "instances"], rows, cfg)
    print(f"T_n={res.T_n} solved per T: {res.solved_counts}")
    if res.T_n is None:
        raise Unsolved(f"unsolved instances at the largest T: {res.unsolved}")
    return EXIT_OK


def cmd_wstate(cfg: dict) -> int:
    ns = [int(x) for x in cfg["sizes"]]
    Vs = [float(x) for x in cfg["V"]]
    if min(ns) < 2 or min(Vs) <= 0:
        raise ConfigError("need n >= 2 and V > 0")
    out = _out_dir(cfg)
    ss = np.linspace(0, 1, cfg["grid"])
    wstate.write_gap_table(out / "gaps.csv", ns, Vs, [float(s) for s in ss])
    _stamp_csv(out / "gaps.csv", cfg)
    summary = {**_meta(cfg), "frustration_free": {str(n): wstate.ff_ground_check(n) for n in ns}}
    if cfg["prep_T"] is not None:
        fids = {}
        for n in ns:
            spec = wstate.ChainPrepSpec(n, V=Vs[0], T=cfg["prep_T"])
            _, t, f = wstate.prepare_chain(spec)
            wstate.write_fidelity_trace(out / f"fidelity_n{n}.csv", t, f)
            _stamp_csv(out / f"fidelity_n{n}.csv", cfg)
            fids[str(n)] = float(f[-1])
        summary["final_fidelity"] = fids
    _write_json(out / "summary.json", summary)
    print(f"wrote gap table for n={ns}")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, seed=True) -> None:
    p.add_argument("--config", help="JSON file of option values; flags override it")
    p.add_argument("--out", default="out", help="output path")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--plot-data", action="store_true", help="also write long-format plot_data.csv")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qwalk-gi", description="Quantum-walk graph isomorphism experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="random isomorphic instances")
    _common(p)
    p.add_argument("--n", type=int, required=False)
    p.add_argument("--count", type=int, default=1)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("encode", help="2-SAT clauses as DIMACS")
    _common(p, seed=False)
    p.add_argument("--instance")
    p.add_argument("--weighted", action="store_true", help="write WCNF with unit weights")
    p.add_argument("--check", action="store_true", help="brute-force satisfiability (n <= 5)")
    p.set_defaults(func=cmd_encode, out="instance.cnf")

    p = sub.add_parser("spectrum", help="gap sweep along the schedule")
    _common(p, seed=False)
    p.add_argument("--instance")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--method", choices=["auto", "dense", "lanczos"], default="auto")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("evolve", help="Schrodinger evolution over a ladder of T")
    _common(p, seed=False)
    p.add_argument("--instance")
    p.add_argument("--T", type=float, default=40.0)
    p.add_argument("--ladder", type=int, default=1, help="number of T values, halving down from --T")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--points", type=int, default=101, help="recorded schedule points")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("protocol", help="sequential measure-and-pin read-out")
    _common(p)
    p.add_argument("--instance")
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--runs", type=int, default=20)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("qmc", help="world-line QMC annealing campaign")
    _common(p)
    p.add_argument("--instances", nargs="*", default=[], help="instance files or directories")
    p.add_argument("--n", type=int, default=None, help="generate instances instead (as in gen)")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--preset", choices=["paper", "paper-beta-m"], default=None)
    for name in ("h", "k", "r", "m", "burn-in"):
        p.add_argument(f"--{name}", type=int, default=None)
    p.add_argument("--beta", type=float, default=None, help="inverse temperature (default r)")
    p.add_argument("--sweep-moves", action="store_true", default=None)
    p.add_argument("--pt-mode", choices=["pseudocode", "prose", "off"], default=None)
    p.add_argument("--p-global", type=float, default=None)
    p.add_argument("--ladder", type=int, nargs="+", default=[500, 1000, 2000, 4000, 8000])
    p.add_argument("--full-ladder", action="store_true", help="keep going after T_n is found")
    p.add_argument("--no-pt-restarts", type=int, default=0, help="restarts of the no-relabeling rerun at T_n")
    p.add_argument("--timing", action="store_true", help="fill wall_ms (makes output non-reproducible)")
    p.set_defaults(func=cmd_qmc)

    p = sub.add_parser("wstate", help="chain preparation gaps and fidelities")
    _common(p, seed=False)
    p.add_argument("--sizes", type=int, nargs="+", default=[3, 5, 8, 16])
    p.add_argument("--V", type=float, nargs="+", default=[1.0])
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--prep-T", type=float, default=None)
    p.set_defaults(func=cmd_wstate)
    return ap


_REQUIRED = {"gen": ["n"], "encode": ["instance"], "spectrum": ["instance"], "evolve": ["instance"], "protocol": ["instance"]}


def resolve_config(argv: list[str] | None = None) -> tuple[dict, callable]:
    """Parse flags, fold in --config, and return (resolved options, command function)."""
    ap = build_parser()
    args = ap.parse_args(argv)
    sub = ap._subparsers._group_actions[0].choices[args.command]
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        version = data.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version}")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {unknown}")
        sub.set_defaults(**data)
        args = ap.parse_args(argv)
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    missing = [k for k in _REQUIRED.get(args.command, []) if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join('--' + m for m in missing)}")
    if cfg.get("jobs", 1) < 1:
        raise ConfigError("jobs must be >= 1")
    return cfg, args.func


def main(argv: list[str] | None = None) -> int:
    try:
        cfg, func = resolve_config(argv)
        return func(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Unsolved as exc:
        print(f"unsolved: {exc}", file=sys.stderr)
        return EXIT_UNSOLVED
    except (OSError, RuntimeError, ValueError, KeyError) as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
