"""Job specifications, result records, the on-disk cache and output files.

Everything written to disk goes through :func:`canonical_json`: keys are
sorted, separators are fixed and floats use Python's shortest round-trip
representation, so equal payloads are equal byte strings.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np
from filelock import FileLock

from . import __version__
from .logreal import LogReal
from .plotting import render_line_plot

COMMANDS = (
    "hzero",
    "hone",
    "chi",
    "dual",
    "gs-check",
    "curve-volume",
    "curve-degree",
    "curve-continuity",
    "prop37",
    "bigness",
    "p1-hs",
    "p1-gromov",
    "p1-count",
)

REQUIRED_INPUTS = {
    "hzero": ("module",),
    "hone": ("module",),
    "chi": ("module",),
    "dual": ("module",),
    "gs-check": (),
    "curve-volume": ("L",),
    "curve-degree": ("L",),
    "curve-continuity": ("L", "A"),
    "prop37": ("L", "A", "s"),
    "bigness": ("L",),
    "p1-hs": (),
    "p1-gromov": (),
    "p1-count": (),
}


class SpecError(ValueError):
    """Malformed job specification or input document."""


def plain(obj):
    """Convert numpy scalars, fractions, tuples and log-reals to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else int(obj)
    if isinstance(obj, LogReal):
        return obj.to_json()
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=False)


@dataclass(frozen=True)
class JobSpec:
    command: str
    inputs: dict = field(default_factory=dict)
    seed: int = 0
    budget: int = 10_000_000
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise SpecError(f"unknown command {self.command!r}")
        missing = [k for k in REQUIRED_INPUTS[self.command] if k not in self.inputs]
        if missing:
            raise SpecError(f"{self.command} needs inputs: {', '.join(missing)}")
        if not 0 <= int(self.seed) < 2**64:
            raise SpecError("seed must be a 64-bit unsigned integer")
        if int(self.budget) < 1:
            raise SpecError("budget must be positive")

    def canonical(self) -> str:
        return canonical_json(
            {
                "command": self.command,
                "inputs": self.inputs,
                "seed": int(self.seed),
                "budget": int(self.budget),
                "options": self.options,
                "version": __version__,
            }
        )

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def to_json(self) -> dict:
        return {"command": self.command, "inputs": self.inputs, "seed": int(self.seed), "budget": int(self.budget), "options": self.options}

    @classmethod
    def from_json(cls, obj: dict) -> "JobSpec":
        return cls(obj["command"], obj.get("inputs", {}), obj.get("seed", 0), obj.get("budget", 10_000_000), obj.get("options", {}))


@dataclass
class ResultRecord:
    digest: str
    timestamp: str
    version: str
    spec: dict
    payload: dict
    exact: dict = field(default_factory=dict)
    ci: dict = field(default_factory=dict)
    violations: int = 0

    def payload_json(self) -> str:
        """The deterministic part of the record (everything but the timestamp)."""
        return canonical_json({"digest": self.digest, "version": self.version, "spec": self.spec, "payload": self.payload, "exact": self.exact, "ci": self.ci, "violations": self.violations})

    def to_json(self) -> dict:
        return plain(
            {
                "digest": self.digest,
                "timestamp": self.timestamp,
                "version": self.version,
                "spec": self.spec,
                "payload": self.payload,
                "exact": self.exact,
                "ci": self.ci,
                "violations": self.violations,
            }
        )

    @classmethod
    def from_json(cls, obj: dict) -> "ResultRecord":
        return cls(obj["digest"], obj["timestamp"], obj["version"], obj["spec"], obj["payload"], obj.get("exact", {}), obj.get("ci", {}), obj.get("violations", 0))

    @classmethod
    def new(cls, spec: JobSpec, payload: dict, exact=None, ci=None, violations: int = 0) -> "ResultRecord":
        now = datetime.now(timezone.utc).isoformat(timespec="seconds")
        # round-trip through canonical JSON so a fresh record equals its replay
        body = json.loads(canonical_json({"spec": spec.to_json(), "payload": payload, "exact": exact or {}, "ci": ci or {}}))
        return cls(spec.digest(), now, __version__, body["spec"], body["payload"], body["exact"], body["ci"], int(violations))


def default_cache_dir() -> Path:
    env = os.environ.get("ARAKELOV_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "arakelov"


class ResultCache:
    """Records keyed by job digest; reads and writes hold an advisory file lock."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else default_cache_dir()

    def _path(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def get(self, digest: str) -> ResultRecord | None:
        path = self._path(digest)
        if not path.exists():
            return None
        with FileLock(str(path) + ".lock"):
            try:
                return ResultRecord.from_json(json.loads(path.read_text()))
            except (json.JSONDecodeError, KeyError):
                return None

    def put(self, record: ResultRecord) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self._path(record.digest)
        with FileLock(str(path) + ".lock"):
            tmp = path.with_suffix(".tmp")
            tmp.write_text(canonical_json(record.to_json()))
            tmp.replace(path)
        return path


def write_csv(path: str | Path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in plain(list(row))])
    return path


def emit_outputs(record: ResultRecord, out_dir: str | Path, formats=("json", "csv", "svg"), stem: str | None = None) -> list[Path]:
    """Write the JSON summary, one CSV per table and one SVG per plot."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or record.spec["command"]
    written = []
    if "json" in formats:
        p = out / f"{stem}.json"
        p.write_text(canonical_json(record.to_json()) + "\n")
        written.append(p)
    if "csv" in formats:
        for name, table in sorted(record.payload.get("tables", {}).items()):
            written.append(write_csv(out / f"{stem}_{name}.csv", table["header"], table["rows"]))
    if "svg" in formats:
        for spec in record.payload.get("plots", []):
            written.append(render_line_plot(spec, out / f"{stem}_{spec['name']}.svg"))
    return written
