"""Preset experiments that write plot data (CSV) and a JSON summary."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from . import ratefn
from .checks import SUITES, run_check, summarize_indirect
from .config import ExperimentConfig
from .records import RunRecord, write_csv

__all__ = ["PRESETS", "ALIASES", "run_preset", "resolve_preset"]


def _c_grid(cfg: ExperimentConfig, default: List[float]) -> List[float]:
    return [float(c) for c in cfg.grids.get("c", default)]


def _eta(cfg: ExperimentConfig, default: float) -> float:
    etas = cfg.grids.get("eta", [default])
    return float(etas[0])


def _fig_rate_compare(cfg: ExperimentConfig, out: Path) -> RunRecord:
    """Rate formula, Poisson and replica-symmetric bounds at fixed eta, all scaled by c^-2."""
    eta = _eta(cfg, 0.5)
    cs = _c_grid(cfg, np.round(np.linspace(0.1, 4.0, 40), 10).tolist())
    cols = ("c", "rate_formula", "poisson", "replica_symmetric", "regime")
    rows = []
    for c in cs:
        r = ratefn.rate_gnp(c, eta)
        rows.append((c, r.rate / c**2, ratefn.poisson_bound(c, eta) / c**2,
                     -ratefn.replica_symmetric_limit(c, eta) / c**2, r.regime.value))
    return _finish(cfg, out, "fig_rate_compare", cols, rows, {"eta": eta, "scaling": "c^-2"})


def _fig_ldrate(cfg: ExperimentConfig, out: Path) -> RunRecord:
    """Triangle-free rate against the -c/4 lower bound, with their crossing."""
    eta = _eta(cfg, 0.0)
    cs = _c_grid(cfg, np.round(np.linspace(0.1, 6.0, 60), 10).tolist())
    bound = lambda c: -c / 4.0
    crossing = ratefn.crossing_point(eta, bound)
    cols = ("c", "rate_formula", "lower_bound", "regime")
    rows = []
    for c in cs:
        r = ratefn.rate_gnp(c, eta)
        rows.append((c, r.rate, bound(c), r.regime.value))
    return _finish(cfg, out, "fig_ldrate", cols, rows, {"eta": eta, "crossing_c": crossing},
                   extra={"crossing_c": crossing})


def _fig_density(cfg: ExperimentConfig, out: Path) -> RunRecord:
    """Conditional edge density q/p over c, with the references 1 and eta^{1/3}."""
    eta = _eta(cfg, 0.5)
    cs = _c_grid(cfg, np.round(np.linspace(0.1, 4.0, 40), 10).tolist())
    ref = eta ** (1.0 / 3.0)
    cols = ("c", "q_over_p", "unconditioned", "replica_symmetric")
    rows = []
    for c in cs:
        z = ratefn.solve_zeta(c, eta)
        rows.append((c, ratefn.q_coeff(c, z) / c, 1.0, ref))
    return _finish(cfg, out, "fig_density", cols, rows, {"eta": eta, "eta_cuberoot": ref})


def _acceptance(cfg: ExperimentConfig, out: Path) -> RunRecord:
    """Every acceptance check, with the config seed and tolerance overrides."""
    results = {}
    for k in SUITES["acceptance"]:
        results[k] = run_check(k, tol=cfg.tolerances, seed=cfg.seed)
    results[10] = summarize_indirect(results)
    cols = ("criterion", "title", "passed")
    rows = [(r.criterion, r.title, int(r.passed)) for r in results.values()]
    # timings are kept out of the CSV so it stays byte-identical between runs
    return _finish(cfg, out, "acceptance", cols, rows, {},
                   extra={"results": [r.to_dict() for r in results.values()]})


PRESETS: Dict[str, Callable[[ExperimentConfig, Path], RunRecord]] = {
    "fig_rate_compare": _fig_rate_compare,
    "fig_ldrate": _fig_ldrate,
    "fig_density": _fig_density,
    "acceptance": _acceptance,
}

# the CLI example names the rate-comparison data "fig3"
ALIASES = {"fig3": "fig_rate_compare"}


def resolve_preset(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS) + sorted(ALIASES)}")
    return name


def _finish(cfg, out, stem, cols, rows, comments, extra=None) -> RunRecord:
    h = cfg.hash()
    path = write_csv(out / f"{stem}.csv", cols, rows, h, comments)
    series = {c: [r[i] for r in rows] for i, c in enumerate(cols)}
    summary = {"csv": str(path), **(extra or {})}
    config = cfg.to_dict()
    config.pop("out_dir")  # the destination does not change the result
    rec = RunRecord(config=config, series=series, summary=summary).finish()
    rec.write(out, stem)
    return rec


def run_preset(
    name: str,
    overrides: Optional[Union[dict, ExperimentConfig]] = None,
) -> RunRecord:
    """Run a preset and write ``<preset>.csv`` plus record files into the config's out_dir."""
    key = resolve_preset(name)
    if isinstance(overrides, ExperimentConfig):
        cfg = overrides
        cfg.preset = key
        cfg.validate()
    else:
        cfg = ExperimentConfig(preset=key).with_overrides(**(overrides or {}))
    out = Path(cfg.out_dir)
    return PRESETS[key](cfg, out)
