"""Command-line interface.

Every subcommand prints one JSON document on stdout and a short human
summary on stderr. Exit status: 0 success, 1 validation failure (bad values
or a failed verification), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path
from typing import List, Optional

from . import __version__, ratefn
from .checks import SUITES, run_check, summarize_indirect
from .cluster import DEFAULT_TRUNCATION, BudgetExceeded, OutOfRegionError, cluster_series
from .config import ConfigError, ExperimentConfig, default_out_dir, load_config
from .estimators import SmallNWarning, estimate_densities, fixed_point_residual, thermodynamic_integration
from .exact import GibbsParams, exact_Xi, exact_Z
from .glauber import run_chains
from .graphstore import SizeError, read_edge_list
from .presets import ALIASES, PRESETS, run_preset
from .records import config_hash, write_csv

__all__ = ["main", "build_parser"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _emit(obj, summary: str) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")
    sys.stderr.write(summary.rstrip() + "\n")


def _model_args(p: argparse.ArgumentParser, need_n: bool = True) -> None:
    if need_n:
        p.add_argument("--n", type=int, required=True, help="number of vertices")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--c", type=float, help="scaled density, p = c / sqrt(n)")
    g.add_argument("--lambda", dest="lam", type=float, help="edge activity lambda")
    g.add_argument("--p", type=float, help="edge probability p = lambda / (1 + lambda)")
    h = p.add_mutually_exclusive_group(required=True)
    h.add_argument("--zeta", type=float, help="triangle penalty in [0, 1]")
    h.add_argument("--eta", type=float, help="lower-tail level; zeta solves the fixed-point equation")


def _params(args) -> GibbsParams:
    n = args.n
    if args.c is not None:
        p = args.c / math.sqrt(n)
    elif args.p is not None:
        p = args.p
    else:
        if args.lam < 0:
            raise ValueError("lambda must be nonnegative")
        p = args.lam / (1.0 + args.lam)
    if args.zeta is not None:
        zeta = args.zeta
    else:
        zeta = ratefn.solve_zeta(p * math.sqrt(n), args.eta)
    if args.lam is not None:
        return GibbsParams(n, args.lam, zeta)
    return GibbsParams.from_p(n, p, zeta)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lowertail", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rate", help="closed-form rate at (c, eta) or (b, eta)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--c", type=float)
    g.add_argument("--b", type=float, help="G(n, m) density, m = b n^{3/2} / 2")
    p.add_argument("--eta", type=float, default=0.0)

    p = sub.add_parser("exact", help="exact log Z (or log Xi with --graph-file) by enumeration")
    _model_args(p, need_n=False)
    p.add_argument("--n", type=int, help="vertices (edge model)")
    p.add_argument("--graph-file", type=Path, help="host graph for the vertex model")

    p = sub.add_parser("sample", help="Glauber chains with run records")
    _model_args(p)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--burn-in", type=int, default=None, help="burn-in steps (default 20 n^2 ln n)")
    p.add_argument("--init", choices=("empty", "gnp"), default="empty")
    p.add_argument("--graph-file", type=Path, help="run the vertex model on this host graph")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("estimate", help="densities, fixed-point residual and optional log Z integration")
    _model_args(p)
    p.add_argument("--chains", type=int, default=2)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--grid", type=int, default=0, help="integration grid (0 skips log Z)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("cluster", help="truncated cluster expansion of log Xi")
    p.add_argument("--graph-file", type=Path, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--k", type=int, default=DEFAULT_TRUNCATION)

    p = sub.add_parser("experiment", help="run a preset")
    p.add_argument("--preset", required=True, choices=sorted(PRESETS) + sorted(ALIASES))
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument("--suite", choices=sorted(SUITES), default="oracle-small")
    p.add_argument("--seed", type=int, default=0)
    return ap


# --- subcommands ----------------------------------------------------------

def _cmd_rate(args) -> int:
    q = ratefn.RateQuery(eta=args.eta, c=args.c, b=args.b)
    out = ratefn.evaluate(q)
    what = f"c={args.c}" if args.c is not None else f"b={args.b}"
    _emit(out, f"rate at {what}, eta={args.eta}: {out['rate']:.8g} ({out['regime']})")
    return 0


def _cmd_exact(args) -> int:
    if args.graph_file is not None:
        H = read_edge_list(args.graph_file)
        args.n = H.n
        params = _params(args)
        s = exact_Xi(H, params.lam, params.zeta)
        d = s.to_dict()
        d["expect_size"] = d.pop("expect_edges")
        d["expect_induced_edges"] = d.pop("expect_triangles")
        d["independent_set_mass"] = d.pop("lower_tail_mass")
        _emit({"params": params.to_dict(), "model": "vertex", **d},
              f"log Xi = {s.log_Z:.10g} on a {H.n}-vertex host")
        return 0
    if args.n is None:
        raise _UsageError("exact: --n is required without --graph-file")
    params = _params(args)
    s = exact_Z(params)
    _emit({"params": params.to_dict(), "model": "edge", **s.to_dict()},
          f"log Z = {s.log_Z:.10g}, E|G| = {s.expect_edges:.6g}, E X = {s.expect_triangles:.6g}")
    return 0


def _cmd_sample(args) -> int:
    params = _params(args)
    host = read_edge_list(args.graph_file) if args.graph_file else None
    if host is not None and host.n != params.n:
        raise ValueError("--n must match the host graph size")
    recs = run_chains(params, args.chains, args.sweeps, workers=args.workers, seed=args.seed,
                      thin=args.thin, burn_in=args.burn_in, host=host,
                      init=None if host is not None else args.init)
    out = args.out or Path(default_out_dir())
    for i, r in enumerate(recs):
        r.write(out, f"sample_chain{i}")
    _emit({"params": params.to_dict(), "chains": [r.summary_dict() for r in recs], "out": str(out)},
          f"{args.chains} chain(s) x {args.sweeps} sweeps written to {out}")
    return 0


def _cmd_estimate(args) -> int:
    params = _params(args)
    rep = estimate_densities(params, args.chains, args.sweeps, seed=args.seed, workers=args.workers)
    result = {"params": params.to_dict(), "density": rep.to_dict()}
    if params.zeta >= 1e-6:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", SmallNWarning)
            result["fixed_point_residual"] = fixed_point_residual(rep, params)
        result["fixed_point_flag"] = "asymptotic prediction, small-n" if caught else None
    if args.grid:
        integ = thermodynamic_integration(params.n, params.c, params.zeta, grid=args.grid, chains=args.chains,
                                          sweeps=args.sweeps, seed=args.seed, workers=args.workers)
        result["log_z"] = {"estimate": integ.log_Z, "error": integ.error}
    out = args.out or Path(default_out_dir())
    cfg = {"command": "estimate", "params": params.to_dict(), "chains": args.chains, "sweeps": args.sweeps,
           "grid": args.grid, "seed": args.seed}
    h = config_hash(cfg)
    cols = ("sweep", "edges", "triangles", "maxdeg", "mindeg")
    files = []
    for i, r in enumerate(rep.records):
        rows = zip(*(r.series[c] for c in cols))
        files.append(str(write_csv(out / f"estimate_chain{i}.csv", cols, rows, h, {"chain": i})))
    result["series_files"] = files
    result["config_hash"] = h
    _emit(result, f"E|G| = {rep.mean_edges:.6g} +- {rep.stderr_edges:.2g} (predicted {rep.predicted_edges:.6g}); "
                  f"E X = {rep.mean_triangles:.6g} +- {rep.stderr_triangles:.2g} "
                  f"(predicted {rep.predicted_triangles:.6g}); regime {rep.regime}")
    return 0


def _cmd_cluster(args) -> int:
    H = read_edge_list(args.graph_file)
    s = cluster_series(H, args.lam, args.zeta, args.k)
    _emit(s.to_dict(), f"truncated log Xi = {s.value:.12g}, certified tail <= {s.tail_bound:.3g}, gamma = {s.gamma:.4g}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.out is not None:
        cfg.out_dir = str(args.out)
    if args.seed is not None:
        cfg.seed = args.seed
    rec = run_preset(args.preset, cfg)
    _emit(rec.summary_dict(), f"preset {cfg.preset} written to {cfg.out_dir} (config {rec.config_hash})")
    if cfg.preset == "acceptance":
        return 0 if all(r["passed"] for r in rec.summary["results"]) else 1
    return 0


def _cmd_verify(args) -> int:
    results = {k: run_check(k, seed=args.seed) for k in SUITES[args.suite]}
    if args.suite == "acceptance":
        results[10] = summarize_indirect(results)
    ok = all(r.passed for r in results.values())
    _emit({"suite": args.suite, "passed": ok, "results": [r.to_dict() for r in results.values()]},
          "\n".join(r.line() for r in results.values()))
    return 0 if ok else 1


COMMANDS = {
    "rate": _cmd_rate,
    "exact": _cmd_exact,
    "sample": _cmd_sample,
    "estimate": _cmd_estimate,
    "cluster": _cmd_cluster,
    "experiment": _cmd_experiment,
    "verify": _cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{exc}\n")
        return 2
    except (ValueError, KeyError, OSError, SizeError, ConfigError, OutOfRegionError, BudgetExceeded) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
