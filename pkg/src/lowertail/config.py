"""Experiment configuration in an INI file with JSON-encoded values.

Layout::

    [experiment]
    preset = "fig_density"
    seed = 0
    out_dir = "runs"

    [grids]
    c = [0.1, 0.2]
    eta = [0.5]

    [mcmc]
    chains = 2
    sweeps = 1000
    thin = 1
    burn_in = null

    [tolerances]
    density = 0.05

Every value is a JSON literal, so floats round-trip exactly.
"""

from __future__ import annotations

import configparser
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Union

from .glauber import default_burn_in
from .records import config_hash

__all__ = ["ExperimentConfig", "ConfigError", "OUT_ENV", "default_out_dir", "load_config", "dump_config"]

OUT_ENV = "LOWERTAIL_OUT"
GRID_KEYS = ("c", "eta", "n", "zeta", "b")


class ConfigError(ValueError):
    """Configuration file or values rejected."""


def default_out_dir() -> str:
    return os.environ.get(OUT_ENV, "runs")


@dataclass
class ExperimentConfig:
    preset: str = "custom"
    grids: Dict[str, List[float]] = field(default_factory=dict)
    chains: int = 2
    sweeps: int = 1000
    thin: int = 1
    burn_in: Optional[int] = None
    seed: int = 0
    out_dir: str = field(default_factory=default_out_dir)
    tolerances: Dict[str, float] = field(default_factory=dict)

    _SECTIONS = {
        "experiment": ("preset", "seed", "out_dir"),
        "mcmc": ("chains", "sweeps", "thin", "burn_in"),
    }

    def validate(self) -> "ExperimentConfig":
        for key, vals in self.grids.items():
            if key not in GRID_KEYS:
                raise ConfigError(f"unknown grid {key!r}; expected one of {GRID_KEYS}")
            if not isinstance(vals, list):
                raise ConfigError(f"grid {key!r} must be a list")
            for v in vals:
                if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                    raise ConfigError(f"grid {key!r} holds a non-numeric value {v!r}")
        if any(not 0.0 <= e < 1.0 for e in self.grids.get("eta", [])):
            raise ConfigError("eta values must lie in [0, 1)")
        if any(n <= 0 or int(n) != n for n in self.grids.get("n", [])):
            raise ConfigError("n values must be positive integers")
        if any(not 0.0 <= z <= 1.0 for z in self.grids.get("zeta", [])):
            raise ConfigError("zeta values must lie in [0, 1]")
        if any(x <= 0 for k in ("c", "b") for x in self.grids.get(k, [])):
            raise ConfigError("c and b values must be positive")
        if self.chains < 1 or self.sweeps < 1 or self.thin < 1:
            raise ConfigError("chains, sweeps and thin must be positive")
        if self.thin > self.sweeps:
            raise ConfigError("thin exceeds sweeps")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be nonnegative")
        for n in self.grids.get("n", []):
            n = int(n)
            burn = default_burn_in("mu", n) if self.burn_in is None else self.burn_in
            measured = self.sweeps * n * (n - 1) // 2
            if measured < burn:
                raise ConfigError(
                    f"MCMC budget of {measured} steps at n={n} is below the burn-in of {burn} steps")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("out_dir")
        return config_hash(d)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        known = {f.name for f in fields(self)}
        bad = set(kw) - known
        if bad:
            raise ConfigError(f"unknown config keys {sorted(bad)}")
        return replace(self, **kw).validate()

    # --- INI I/O ----------------------------------------------------------

    def dumps(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        d = self.to_dict()
        for section, keys in self._SECTIONS.items():
            cp[section] = {k: json.dumps(d[k]) for k in keys}
        cp["grids"] = {k: json.dumps(v) for k, v in self.grids.items()}
        cp["tolerances"] = {k: json.dumps(v) for k, v in self.tolerances.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        allowed = set(cls._SECTIONS) | {"grids", "tolerances"}
        extra = set(cp.sections()) - allowed
        if extra:
            raise ConfigError(f"unknown sections {sorted(extra)}")
        kw: dict = {}

        def parse(section, key, raw):
            try:
                return json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"[{section}] {key}: not a JSON value ({raw!r})") from exc

        for section, keys in cls._SECTIONS.items():
            if section not in cp:
                continue
            for key, raw in cp[section].items():
                if key not in keys:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                kw[key] = parse(section, key, raw)
        for section in ("grids", "tolerances"):
            if section in cp:
                kw[section] = {k: parse(section, k, v) for k, v in cp[section].items()}
        return cls(**kw).validate()


def load_config(path: Union[str, os.PathLike]) -> ExperimentConfig:
    return ExperimentConfig.loads(Path(path).read_text(encoding="utf-8"))


def dump_config(cfg: ExperimentConfig, path: Union[str, os.PathLike]) -> None:
    Path(path).write_text(cfg.dumps(), encoding="utf-8")
