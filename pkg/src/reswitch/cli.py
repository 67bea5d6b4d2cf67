"""Command line interface: instance generation, runs, and serialized results.

Subcommands: generate, solve, round, certify, enumerate, bench. Records
are JSON documents with a deterministic "record" payload (byte-identical
across replays of the same config and seeds) plus volatile "timing" and
"timestamp" fields kept outside it; a CSV summary mirrors the scalar
fields. Exit codes: 0 success, 2 invalid input, 3 numerical failure,
4 enumeration or dense cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import congestion, enumeration, frankwolfe, graphs, rounding, solver
from .errors import (CapExceededError, InvalidInputError, NumericalError,
                     StructuralError)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; mirrors the config file keys."""

    input_path: str | None = None
    n: int = 0
    extra: int = 0
    weight_lo: float = 0.5
    weight_hi: float = 2.0
    demand: str = "pair"
    multigraph: bool = False
    seed: int = 0
    q: int | None = None
    alpha: float = 0.1
    delta: float = 0.1
    p_min_constant: float = 0.0
    repair: str = "trim_and_fill"
    max_resamples: int = 100
    repeats: int = 1
    max_iterations: int = 500
    step_rule: str = "monotone_guard"
    epsilon: float = 1e-8
    preconditioner: str = "auto"
    enumerate_baseline: bool = False
    output: str | None = None
    format: str = "json"

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        with open(path, "r", encoding="ascii") as fh:
            raw = json.load(fh)
        fields = {f for f in ExperimentConfig.__dataclass_fields__}
        unknown = set(raw) - fields
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        return ExperimentConfig(**raw)


def generate_instance(n: int, extra: int, seed: int, weight_lo: float = 0.5,
                      weight_hi: float = 2.0, demand: str = "pair",
                      multigraph: bool = False) -> tuple[graphs.Graph, np.ndarray]:
    """Random instance with a spanning-tree backbone and extra switchable edges.

    The backbone is a random-attachment tree; extra edges are drawn
    uniformly over non-tree node pairs (distinct pairs unless multigraph
    is set). Weights are uniform on [weight_lo, weight_hi]. Demands are a
    random source/sink pair or a Gaussian in the zero-sum subspace,
    normalized to unit 2-norm either way.
    """
    if n < 2:
        raise InvalidInputError("need at least 2 nodes")
    if extra < 0:
        raise InvalidInputError("extra edge count must be nonnegative")
    rng = np.random.default_rng(seed)
    pairs = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    tree_set = set(pairs)
    if not multigraph:
        capacity = n * (n - 1) // 2 - (n - 1)
        if extra > capacity:
            raise InvalidInputError(
                f"{extra} extra edges exceed simple-graph capacity {capacity}; "
                "pass multigraph to allow parallel edges")
    chosen: set[tuple[int, int]] = set()
    added = 0
    while added < extra:
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        if u > v:
            u, v = v, u
        if (u, v) in tree_set or (not multigraph and (u, v) in chosen):
            continue
        chosen.add((u, v))
        pairs.append((u, v))
        added += 1
    w = rng.uniform(weight_lo, weight_hi, len(pairs))
    g = graphs.make_graph(n, [(i, j, wk) for (i, j), wk in zip(pairs, w)],
                          backbone=range(n - 1))
    if demand == "pair":
        a, b = rng.choice(n, size=2, replace=False)
        d = np.zeros(n)
        d[int(a)], d[int(b)] = 1.0, -1.0
    elif demand == "gauss":
        d = rng.standard_normal(n)
        d -= d.mean()
    else:
        raise InvalidInputError(f"unknown demand kind {demand!r}")
    d /= np.linalg.norm(d)
    return g, d


def instance_digest(g: graphs.Graph, d: np.ndarray, q: int) -> str:
    return hashlib.sha256(graphs.instance_text(g, d, q).encode("ascii")).hexdigest()


def default_budget(g: graphs.Graph) -> int:
    free = g.m - len(g.backbone)
    return len(g.backbone) + max(1, free // 2) if free else len(g.backbone)


def _load(cfg: ExperimentConfig) -> tuple[graphs.Graph, np.ndarray, int]:
    if cfg.input_path:
        g, d, q_file = graphs.read_instance(cfg.input_path)
        q = cfg.q if cfg.q is not None else q_file
    else:
        if cfg.n < 2:
            raise InvalidInputError("config needs input_path or a generator size n >= 2")
        g, d = generate_instance(cfg.n, cfg.extra, cfg.seed, cfg.weight_lo,
                                 cfg.weight_hi, cfg.demand, cfg.multigraph)
        q = cfg.q if cfg.q is not None else default_budget(g)
    return g, d, int(q)


def _solver_config(cfg: ExperimentConfig) -> solver.SolverConfig:
    return solver.SolverConfig(epsilon=cfg.epsilon, preconditioner=cfg.preconditioner)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Full pipeline: optimize, certify, round with repeats, optional baseline."""
    g, d, q = _load(cfg)
    fw_cfg = frankwolfe.FWConfig(q=q, alpha=cfg.alpha,
                                 max_iterations=cfg.max_iterations,
                                 step_rule=cfg.step_rule, solver=_solver_config(cfg))
    timing = {}
    t0 = time.perf_counter()
    s_frac, cert, trace = frankwolfe.run(g, d, fw_cfg)
    timing["optimize_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rounded_values = []
    repairs_total = 0
    for r in range(cfg.repeats):
        params = rounding.RoundingParams(delta=cfg.delta,
                                         p_min_constant=cfg.p_min_constant,
                                         repair=cfg.repair,
                                         max_resamples=cfg.max_resamples,
                                         rng_seed=cfg.seed + r)
        sbar = rounding.floor_probabilities(s_frac, g, params)
        report = rounding.sample(sbar, g, q, params)
        repairs_total += len(report.repairs)
        rounded_values.append(congestion.phi(g, report.sampled.sbin, d,
                                             _solver_config(cfg)))
    timing["round_s"] = time.perf_counter() - t0

    record = {
        "schema_version": SCHEMA_VERSION,
        "kind": "experiment",
        "instance_digest": instance_digest(g, d, q),
        "n": g.n, "m": g.m, "q": q,
        "alpha": cfg.alpha, "delta": cfg.delta, "seed": cfg.seed,
        "repeats": cfg.repeats,
        "iterations": len(trace.records),
        "phi_fractional": cert.phi_value,
        "certificate": _cert_dict(cert),
        "rounded_phi_mean": float(np.mean(rounded_values)),
        "rounded_phi_min": float(np.min(rounded_values)),
        "rounded_phi_max": float(np.max(rounded_values)),
        "repairs_total": repairs_total,
        "rng_algorithm": rounding.RNG_ALGORITHM,
    }
    if cfg.enumerate_baseline:
        t0 = time.perf_counter()
        best = enumeration.enumerate_optimal(g, d, q)
        timing["enumerate_s"] = time.perf_counter() - t0
        record["best_phi"] = best.best_phi
        record["fractional_over_best"] = cert.phi_value / best.best_phi
        record["rounded_min_over_best"] = record["rounded_phi_min"] / best.best_phi
    return _wrap(record, timing)


def _cert_dict(cert: frankwolfe.Certificate) -> dict:
    return {"gap": cert.gap, "tau": cert.tau, "phi_value": cert.phi_value,
            "certified": cert.certified, "bound_factor": cert.bound_factor}


def _wrap(record: dict, timing: dict) -> dict:
    return {"record": record, "timing": timing,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())}


def _write_output(doc, path: str | None, fmt: str) -> None:
    docs = doc if isinstance(doc, list) else [doc]
    if fmt == "json":
        text = json.dumps(doc, indent=2, sort_keys=True)
        if path:
            with open(path, "w", encoding="ascii") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return
    rows = []
    for item in docs:
        flat = {}
        for key, val in sorted(_flatten(item.get("record", item)).items()):
            flat[key] = val
        for key, val in sorted(_flatten(item.get("timing", {})).items()):
            flat[f"timing.{key}"] = val
        rows.append(flat)
    cols = sorted({c for row in rows for c in row})
    out = open(path, "w", newline="", encoding="ascii") if path else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=cols)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if path:
            out.close()


def _flatten(obj, prefix="") -> dict:
    flat = {}
    for key, val in obj.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            flat.update(_flatten(val, prefix=f"{name}."))
        elif isinstance(val, (list, tuple)):
            continue
        else:
            flat[name] = val
    return flat


# --- subcommand implementations --------------------------------------------

def _cmd_generate(args) -> int:
    g, d = generate_instance(args.n, args.extra, args.seed, args.weight_lo,
                             args.weight_hi, args.demand, args.multigraph)
    q = args.q if args.q is not None else default_budget(g)
    graphs.write_instance(args.output, g, d, q)
    print(f"wrote {args.output}: n={g.n} m={g.m} q={q} "
          f"digest={instance_digest(g, d, q)}")
    return 0


def _cmd_solve(args) -> int:
    cfg = _config_from_args(args)
    g, d, q = _load(cfg)
    fw_cfg = frankwolfe.FWConfig(q=q, alpha=cfg.alpha,
                                 max_iterations=cfg.max_iterations,
                                 step_rule=cfg.step_rule, solver=_solver_config(cfg))
    t0 = time.perf_counter()
    s_frac, cert, trace = frankwolfe.run(g, d, fw_cfg)
    timing = {"optimize_s": time.perf_counter() - t0}
    record = {
        "schema_version": SCHEMA_VERSION, "kind": "solve",
        "instance_digest": instance_digest(g, d, q),
        "n": g.n, "m": g.m, "q": q, "alpha": cfg.alpha, "seed": cfg.seed,
        "iterations": len(trace.records),
        "phi_fractional": cert.phi_value,
        "certificate": _cert_dict(cert),
        "switch_vector": [float(v) for v in s_frac],
    }
    _write_output(_wrap(record, timing), cfg.output, cfg.format)
    return 0


def _read_solution(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    rec = doc.get("record", doc)
    if "switch_vector" not in rec:
        raise InvalidInputError(f"{path} carries no switch_vector field")
    return np.array(rec["switch_vector"], dtype=float)


def _cmd_round(args) -> int:
    cfg = _config_from_args(args)
    g, d, q = _load(cfg)
    s = _read_solution(args.solution)
    t0 = time.perf_counter()
    values = []
    reports = []
    for r in range(cfg.repeats):
        params = rounding.RoundingParams(delta=cfg.delta,
                                         p_min_constant=cfg.p_min_constant,
                                         repair=cfg.repair,
                                         max_resamples=cfg.max_resamples,
                                         rng_seed=cfg.seed + r)
        sbar = rounding.floor_probabilities(s, g, params)
        rep = rounding.sample(sbar, g, q, params)
        values.append(congestion.phi(g, rep.sampled.sbin, d, _solver_config(cfg)))
        reports.append({"seed": cfg.seed + r, "repairs": len(rep.repairs),
                        "resamples": rep.resamples_used,
                        "edges_on": float(rep.sampled.sbin.sum()),
                        "phi": values[-1]})
    timing = {"round_s": time.perf_counter() - t0}
    record = {
        "schema_version": SCHEMA_VERSION, "kind": "round",
        "instance_digest": instance_digest(g, d, q),
        "n": g.n, "m": g.m, "q": q, "delta": cfg.delta, "seed": cfg.seed,
        "repeats": cfg.repeats, "repair": cfg.repair,
        "rng_algorithm": rounding.RNG_ALGORITHM,
        "rounded_phi_mean": float(np.mean(values)),
        "rounded_phi_min": float(np.min(values)),
        "rounded_phi_max": float(np.max(values)),
        "draws": reports,
    }
    _write_output(_wrap(record, timing), cfg.output, cfg.format)
    return 0


def _cmd_certify(args) -> int:
    cfg = _config_from_args(args)
    g, d, q = _load(cfg)
    s = _read_solution(args.solution) if args.solution else g.backbone_indicator()
    fw_cfg = frankwolfe.FWConfig(q=q, alpha=cfg.alpha, solver=_solver_config(cfg))
    t0 = time.perf_counter()
    cert = frankwolfe.certificate(g, s, d, fw_cfg)
    timing = {"certify_s": time.perf_counter() - t0}
    record = {
        "schema_version": SCHEMA_VERSION, "kind": "certify",
        "instance_digest": instance_digest(g, d, q),
        "n": g.n, "m": g.m, "q": q, "alpha": cfg.alpha,
        "certificate": _cert_dict(cert),
    }
    _write_output(_wrap(record, timing), cfg.output, cfg.format)
    return 0


def _cmd_enumerate(args) -> int:
    cfg = _config_from_args(args)
    g, d, q = _load(cfg)
    t0 = time.perf_counter()
    result = enumeration.enumerate_optimal(g, d, q)
    timing = {"enumerate_s": time.perf_counter() - t0}
    record = {
        "schema_version": SCHEMA_VERSION, "kind": "enumerate",
        "instance_digest": instance_digest(g, d, q),
        "n": g.n, "m": g.m, "q": q,
        "best_phi": result.best_phi,
        "evaluated_count": result.evaluated_count,
        "best_switch_vector": [float(v) for v in result.best_config.sbin],
    }
    _write_output(_wrap(record, timing), cfg.output, cfg.format)
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.output:
        cfg = replace(cfg, output=args.output)
    doc = run_experiment(cfg)
    _write_output(doc, cfg.output, cfg.format)
    return 0


def _cmd_bench(args) -> int:
    sizes = []
    for part in args.sizes.split(","):
        n_s, m_s = part.split(":")
        sizes.append((int(n_s), int(m_s)))
    docs = []
    for n, m in sizes:
        extra = m - (n - 1)
        if extra < 0:
            raise InvalidInputError(f"size {n}:{m} has fewer edges than a tree")
        g, d = generate_instance(n, extra, args.seed, multigraph=True)
        q = default_budget(g)
        scfg = solver.SolverConfig(epsilon=args.epsilon, preconditioner=args.preconditioner)
        fw_cfg = frankwolfe.FWConfig(q=q, alpha=args.alpha,
                                     max_iterations=args.iters,
                                     solver=scfg)
        t0 = time.perf_counter()
        s_frac, cert, trace = frankwolfe.run(g, d, fw_cfg)
        total = time.perf_counter() - t0
        walls = [r.wall_time for r in trace.records]
        steps = np.diff(walls) if len(walls) > 1 else np.array([total])
        record = {
            "schema_version": SCHEMA_VERSION, "kind": "bench",
            "n": g.n, "m": g.m, "q": q, "alpha": args.alpha, "seed": args.seed,
            "iterations": len(trace.records),
            "certified": cert.certified,
            "phi": cert.phi_value,
            "per_iteration_s": float(np.median(steps)),
        }
        docs.append(_wrap(record, {"total_s": total}))
        per_it = record["per_iteration_s"]
        print(f"n={g.n} m={g.m}: {per_it:.4f} s/iteration, "
              f"{len(trace.records)} iterations, certified={cert.certified}")
    if args.output:
        _write_output(docs, args.output, args.format)
    return 0


def _config_from_args(args) -> ExperimentConfig:
    kwargs = {}
    for name in ExperimentConfig.__dataclass_fields__:
        if hasattr(args, name) and getattr(args, name) is not None:
            kwargs[name] = getattr(args, name)
    return ExperimentConfig(**kwargs)


def _add_common(p: argparse.ArgumentParser, *names) -> None:
    opts = {
        "input": lambda: p.add_argument("--input", dest="input_path", required=True,
                                        help="instance file"),
        "output": lambda: p.add_argument("--output", default=None),
        "format": lambda: p.add_argument("--format", choices=("json", "csv"),
                                         default="json"),
        "seed": lambda: p.add_argument("--seed", type=int, default=0),
        "q": lambda: p.add_argument("--q", type=int, default=None,
                                    help="edge budget (defaults to the instance file)"),
        "alpha": lambda: p.add_argument("--alpha", type=float, default=0.1),
        "delta": lambda: p.add_argument("--delta", type=float, default=0.1),
        "repeats": lambda: p.add_argument("--repeats", type=int, default=1),
        "solver": lambda: (
            p.add_argument("--epsilon", type=float, default=1e-8),
            p.add_argument("--preconditioner", choices=solver.PRECONDITIONERS,
                           default="auto"),
            p.add_argument("--max-iterations", dest="max_iterations", type=int,
                           default=500)),
    }
    for name in names:
        opts[name]()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reswitch",
                                 description="budgeted switching reconfiguration")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--extra", type=int, default=0)
    p.add_argument("--weight-lo", dest="weight_lo", type=float, default=0.5)
    p.add_argument("--weight-hi", dest="weight_hi", type=float, default=2.0)
    p.add_argument("--demand", choices=("pair", "gauss"), default="pair")
    p.add_argument("--multigraph", action="store_true")
    p.add_argument("--output", required=True)
    _add_common(p, "seed", "q")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="optimize and certify a fractional solution")
    _add_common(p, "input", "output", "format", "seed", "q", "alpha", "solver")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("round", help="round a fractional solution")
    p.add_argument("--solution", required=True, help="JSON record from solve")
    p.add_argument("--repair", choices=rounding.REPAIR_MODES, default="trim_and_fill")
    p.add_argument("--p-min-constant", dest="p_min_constant", type=float, default=0.0)
    p.add_argument("--max-resamples", dest="max_resamples", type=int, default=100)
    _add_common(p, "input", "output", "format", "seed", "q", "delta", "repeats",
                "solver")
    p.set_defaults(func=_cmd_round)

    p = sub.add_parser("certify", help="evaluate the gap certificate at a point")
    p.add_argument("--solution", default=None, help="JSON record with switch_vector")
    _add_common(p, "input", "output", "format", "q", "alpha", "solver")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("enumerate", help="exact brute-force baseline")
    _add_common(p, "input", "output", "format", "q")
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("experiment", help="run a config-file experiment end to end")
    p.add_argument("--config", required=True, help="flat JSON config file")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("bench", help="per-iteration timing across sizes")
    p.add_argument("--sizes", required=True, help="comma list of n:m pairs")
    p.add_argument("--iters", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--preconditioner", choices=solver.PRECONDITIONERS, default="auto")
    _add_common(p, "output", "format", "seed", "alpha")
    p.set_defaults(func=_cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, StructuralError, OSError,
            json.JSONDecodeError) as exc:
        print(json.dumps({"error": "invalid input", "detail": str(exc)}),
              file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(json.dumps({"error": "numerical failure", "detail": str(exc)}),
              file=sys.stderr)
        return 3
    except CapExceededError as exc:
        print(json.dumps({"error": "cap exceeded", "detail": str(exc)}),
              file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
