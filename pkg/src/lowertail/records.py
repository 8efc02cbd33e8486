"""Run records: configuration snapshot, observable series, summaries, persistence."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from . import __version__

__all__ = ["RunRecord", "config_hash", "canonical_json", "write_csv", "read_csv_header"]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()[:16]


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunRecord:
    """Seeded run: config, per-measurement series and summary statistics.

    ``series`` maps observable names to equal-length lists; the ``sweep``
    entry, when present, indexes the measurements.
    """

    config: dict
    series: Dict[str, List[float]] = field(default_factory=dict)
    summary: Dict[str, dict] = field(default_factory=dict)
    version: str = __version__
    started: str = field(default_factory=_now)
    finished: Optional[str] = None

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def finish(self) -> "RunRecord":
        self.finished = _now()
        return self

    def payload(self) -> dict:
        """Everything except timestamps; equal payloads mean identical runs."""
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "series": self.series,
            "summary": self.summary,
            "version": self.version,
        }

    def summary_dict(self) -> dict:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "summary": self.summary,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
        }

    def json_lines(self) -> List[str]:
        names = list(self.series)
        length = len(self.series[names[0]]) if names else 0
        return [canonical_json({k: self.series[k][i] for k in names}) for i in range(length)]

    def write(self, out_dir: os.PathLike, stem: str = "run") -> Dict[str, Path]:
        """Append measurements to ``<stem>.jsonl`` and write ``<stem>.summary.json``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        series_path = out / f"{stem}.jsonl"
        summary_path = out / f"{stem}.summary.json"
        with open(series_path, "a", encoding="utf-8") as fh:
            for line in self.json_lines():
                fh.write(line + "\n")
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump(self.summary_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return {"series": series_path, "summary": summary_path}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RunRecord) and canonical_json(self.payload()) == canonical_json(other.payload())


def _cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(
    path: os.PathLike,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    config_hash_value: str,
    comments: Optional[Dict[str, object]] = None,
) -> Path:
    """CSV whose first line is ``# config_hash: <hash>``, then ``# key: value`` notes and the header.

    Floats are written with repr so files round-trip exactly and are
    byte-identical across runs.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_hash: {config_hash_value}"]
    for k, v in (comments or {}).items():
        lines.append(f"# {k}: {v}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_cell(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv_header(path: os.PathLike) -> Dict[str, str]:
    """The ``# key: value`` lines at the top of a CSV written by :func:`write_csv`."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            k, _, v = line[2:].rstrip("\n").partition(": ")
            out[k] = v
    return out
