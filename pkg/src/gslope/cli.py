"""Command-line interface.

Exit codes: 0 success, 2 unreadable/invalid input or configuration,
3 dimension mismatch, 4 solver did not converge (best iterate still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import oracle_tune, run_protocol
from .graph import (GraphError, connected_components, gen_caveman, gen_path, rho,
                    spectral_norm_sq)
from .io import (FormatError, read_edge_list, read_vector, read_weights, write_denoise_result,
                 write_edge_list, write_json, write_weights)
from .ordered_l1 import WeightsError
from .solver import DenoiseProblem, SolverConfig, solve
from .weights import SCHEMES, WeightScheme, alpha_grid, compute_weights

EXIT_OK, EXIT_INPUT, EXIT_DIMENSION, EXIT_NOT_CONVERGED = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _versions():
    return {"gslope": __version__, "numpy": np.__version__}


def _load_graph(path):
    try:
        return read_edge_list(path)
    except FormatError as exc:
        raise CliError(str(exc)) from exc


def _load_signal(path, g, what="signal"):
    try:
        y = read_vector(path)
    except FormatError as exc:
        raise CliError(str(exc)) from exc
    if y.shape[0] != g.n:
        raise CliError(f"{path}: {what} has {y.shape[0]} values, graph has {g.n} vertices",
                       EXIT_DIMENSION)
    return y


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solver_config(args, **defaults):
    kw = dict(defaults)
    if args.eps is not None:
        kw["gap_tolerance"] = args.eps
    if args.max_iter is not None:
        kw["max_iterations"] = args.max_iter
    if getattr(args, "restart", False):
        kw["adaptive_restart"] = True
    try:
        return SolverConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid solver settings: {exc}") from exc


def _scheme_from_args(args):
    params = {"n_samples": args.mc_samples}
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.scheme == "alpha_scaled" and args.alpha is None:
        raise CliError("--scheme alpha_scaled needs --alpha")
    return WeightScheme(args.scheme, params)


def _weights_from_args(args, g):
    """Returns the weights and provenance metadata."""
    if args.weights:
        try:
            w = read_weights(args.weights)
        except FormatError as exc:
            raise CliError(str(exc)) from exc
        if len(w) != g.p:
            raise CliError(f"{args.weights}: {len(w)} weights for {g.p} edges", EXIT_DIMENSION)
        return w, {"weights_file": str(args.weights)}
    if args.sigma is None:
        raise CliError("--scheme needs --sigma")
    scheme = _scheme_from_args(args)
    meta = {"scheme": scheme.kind, "sigma": args.sigma, "seed": args.seed}
    rho_value = None
    if scheme.kind in ("corollary", "practical_gs", "practical_gl"):
        rho_value = rho(g)
        meta["rho"] = rho_value
    if scheme.kind == "monte_carlo":
        meta["n_samples"] = args.mc_samples
    if scheme.kind == "alpha_scaled":
        meta["alpha"] = args.alpha
    try:
        w = compute_weights(g, scheme, args.sigma, rho_value=rho_value, rng=args.seed)
    except (ValueError, WeightsError) as exc:
        raise CliError(f"cannot build {scheme.kind} weights: {exc}") from exc
    return w, meta


# -- commands ----------------------------------------------------------------

def cmd_denoise(args):
    g = _load_graph(args.graph)
    y = _load_signal(args.signal, g)
    w, meta = _weights_from_args(args, g)
    cfg = _solver_config(args)
    res = solve(DenoiseProblem(g, y, w), cfg)
    out = _out_dir(args.out_dir)
    metadata = {"command": "denoise", "graph": str(args.graph), "signal": str(args.signal),
                "gap_tolerance": cfg.gap_tolerance, "max_iterations": cfg.max_iterations,
                "adaptive_restart": cfg.adaptive_restart, "versions": _versions(), **meta}
    write_denoise_result(res, y, out / "denoise.csv", out / "denoise.json", metadata)
    print(f"denoise: n={g.n} p={g.p} iterations={res.iterations} gap={res.gap:.3e} "
          f"converged={res.converged} -> {out}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_weights(args):
    g = _load_graph(args.graph)
    if args.sigma is None:
        raise CliError("--sigma is required")
    args.weights = None
    w, meta = _weights_from_args(args, g)
    out = _out_dir(args.out_dir)
    meta.update(command="weights", graph=str(args.graph), p=g.p, n=g.n, versions=_versions())
    write_weights(w, out / "weights.txt", meta)
    print(f"weights: scheme={meta['scheme']} p={g.p} lambda_1={w.lambdas[0]:.4g} "
          f"lambda_p={w.lambdas[-1]:.4g} -> {out / 'weights.txt'}")
    return EXIT_OK


SIMULATE_KEYS = {"graph", "sigma", "schemes", "signal", "c", "sweep", "replicates", "seed",
                 "mc_samples", "solver", "support_tol"}


def _load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"{path}: cannot read ({exc.strerror or exc})") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(config, dict):
        raise CliError(f"{path}: top level must be a JSON object")
    unknown = set(config) - SIMULATE_KEYS
    if unknown:
        raise CliError(f"{path}: unknown keys {sorted(unknown)}")
    return config


def _graph_from_spec(spec, seed):
    if not isinstance(spec, dict):
        raise CliError("config 'graph' must be an object")
    try:
        if "file" in spec:
            return read_edge_list(spec["file"])
        kind = spec.get("kind")
        if kind == "path":
            return gen_path(int(spec["n"]))
        if kind == "caveman":
            return gen_caveman(int(spec["l"]), int(spec["k"]), float(spec["q"]),
                               rng=spec.get("seed", seed))
    except KeyError as exc:
        raise CliError(f"config 'graph' is missing {exc}") from exc
    except (FormatError, GraphError) as exc:
        raise CliError(str(exc)) from exc
    raise CliError(f"config 'graph': unknown kind {spec.get('kind')!r} (path, caveman or file)")


def cmd_simulate(args):
    config = _load_config(args.config)
    for key in ("sigma", "seed", "replicates"):
        if getattr(args, key) is not None:
            config[key] = getattr(args, key)
    seed = int(config.get("seed", 0))
    if "graph" not in config or "sigma" not in config:
        raise CliError(f"{args.config}: 'graph' and 'sigma' are required")
    g = _graph_from_spec(config["graph"], seed)
    solver_kw = {"record_history": False, "adaptive_restart": True, "gap_tolerance": 1e-4}
    solver_kw.update(config.get("solver", {}))
    cfg = _solver_config(args, **solver_kw)
    schemes = config.get("schemes", ["practical_gl", "practical_gs"])
    bad = [s for s in schemes if s not in SCHEMES]
    if bad:
        raise CliError(f"{args.config}: unknown schemes {bad}")
    try:
        report = run_protocol(
            g, float(config["sigma"]), schemes, config.get("sweep"),
            int(config.get("replicates", 100)), seed,
            signal=config.get("signal", "edge_subset_projector"), c=float(config.get("c", 8.0)),
            solver_cfg=cfg, support_tol=config.get("support_tol"),
            mc_samples=int(config.get("mc_samples", 1000)), workers=args.threads)
    except (ValueError, GraphError) as exc:
        raise CliError(f"{args.config}: {exc}") from exc
    out = _out_dir(args.out_dir)
    (out / "report.csv").write_text(report.to_csv())
    echo = json.loads(report.config_json())
    echo.update(command="simulate", config_file=str(args.config), input_config=config,
                adaptive_restart=cfg.adaptive_restart, versions=_versions())
    write_json(echo, out / "report.json")
    write_edge_list(g, out / "graph.txt", comment=f"graph used by simulate, seed {seed}")
    print(f"simulate: n={g.n} p={g.p} cells={len(report.rows)} "
          f"replicates={report.rows[0].replicates} -> {out / 'report.csv'}")
    return EXIT_OK


def cmd_tune(args):
    g = _load_graph(args.graph)
    y = _load_signal(args.signal, g)
    truth = _load_signal(args.truth, g, "truth")
    if args.sigma is None or args.sigma <= 0:
        raise CliError("--sigma must be positive")
    grid = alpha_grid(args.grid_size, args.alpha_min, args.alpha_max)
    cfg = _solver_config(args, record_history=False, adaptive_restart=True)
    res = oracle_tune(g, y, truth, args.sigma, grid, cfg)
    out = _out_dir(args.out_dir)
    (out / "curves.csv").write_text(res.to_csv())
    write_json({"command": "tune", "graph": str(args.graph), "signal": str(args.signal),
                "truth": str(args.truth), "sigma": args.sigma, "grid_size": args.grid_size,
                "alpha_min": args.alpha_min, "alpha_max": args.alpha_max,
                "best_alpha_gl": res.best_alpha_gl, "best_alpha_gs": res.best_alpha_gs,
                "best_mse_gl": res.best_mse_gl, "best_mse_gs": res.best_mse_gs,
                "gap_tolerance": cfg.gap_tolerance, "versions": _versions()},
               out / "tune.json")
    print(f"tune: best alpha GL={res.best_alpha_gl:.4g} (MSE {res.best_mse_gl:.4g}), "
          f"GS={res.best_alpha_gs:.4g} (MSE {res.best_mse_gs:.4g}) -> {out / 'curves.csv'}")
    return EXIT_OK


def cmd_graph_gen(args):
    try:
        if args.kind == "path":
            g = gen_path(args.n)
            desc = f"path n={args.n}"
        else:
            g = gen_caveman(args.l, args.k, args.q, rng=args.seed)
            desc = f"caveman l={args.l} k={args.k} q={args.q} seed={args.seed}"
    except GraphError as exc:
        raise CliError(str(exc)) from exc
    write_edge_list(g, args.out, comment=f"{desc} (gslope {__version__})")
    print(f"graph gen: {desc}: n={g.n} p={g.p} -> {args.out}")
    return EXIT_OK


def cmd_graph_inspect(args):
    g = _load_graph(args.graph)
    comp = connected_components(g)
    r = rho(g, sample=args.rho_sample, rng=args.seed)
    tag = " (lower bound, sampled)" if args.rho_sample and args.rho_sample < g.p else ""
    print(f"n={g.n} p={g.p} K={comp.count} rho={r:.6g}{tag} "
          f"lambda_max={spectral_norm_sq(g):.6g} max_degree={int(g.degrees.max())}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_solver_flags(p):
    p.add_argument("--eps", type=float, default=None, help="duality-gap tolerance")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--restart", action="store_true", help="adaptive momentum restart")


def _add_weight_flags(p):
    p.add_argument("--scheme", choices=SCHEMES, default="practical_gs")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--mc-samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gslope", description="Graph-Slope denoising toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="solve one denoising problem")
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--weights", default=None, help="weights file (overrides --scheme)")
    _add_weight_flags(p)
    _add_solver_flags(p)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("weights", help="compute a weight schedule")
    p.add_argument("--graph", required=True)
    _add_weight_flags(p)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("simulate", help="run a replication protocol from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    _add_solver_flags(p)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tune", help="oracle alpha tuning against a known truth")
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--alpha-min", type=float, default=1e-5)
    p.add_argument("--alpha-max", type=float, default=10 ** 1.5)
    _add_solver_flags(p)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("graph", help="generate or inspect graphs")
    gsub = p.add_subparsers(dest="graph_command", required=True)
    gen = gsub.add_parser("gen")
    gen.add_argument("kind", choices=("path", "caveman"))
    gen.add_argument("--n", type=int, default=100)
    gen.add_argument("--l", type=int, default=4)
    gen.add_argument("--k", type=int, default=10)
    gen.add_argument("--q", type=float, default=0.1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_graph_gen)
    ins = gsub.add_parser("inspect")
    ins.add_argument("--graph", required=True)
    ins.add_argument("--rho-sample", type=int, default=None,
                     help="solve only this many random edges (rho becomes a lower bound)")
    ins.add_argument("--seed", type=int, default=0)
    ins.set_defaults(func=cmd_graph_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"gslope: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
