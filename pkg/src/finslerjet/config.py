"""TOML run configuration.

Unknown keys are rejected so that typos fail loudly. See
``configs/`` for complete documents.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exprdsl
from .errors import ConfigError, FinslerError
from .finsler_core import FAMILIES, MetricSpec, _cone

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FORMATS = ("csv", "json")

_SCHEMA = {
    "metric": {"family", "dim", "a", "b", "f", "cone"},
    "sample": {"x", "y", "v", "grid"},
    "sample.grid": {"min", "max", "count"},
    "schwarz": {"phi", "f", "orientation", "x", "y", "grid", "constant_K"},
    "schwarz.grid": {"min", "max", "count"},
    "schwarz.constant_K": {"K", "a", "b", "c", "d"},
    "options": {"seed", "tol", "samples", "format", "out", "jobs"},
}


@dataclass
class SchwarzConfig:
    phi: exprdsl.Expr | None = None
    f: exprdsl.Expr | None = None
    orientation: int = 1
    xs: list = field(default_factory=list)
    ys: list = field(default_factory=lambda: [0.01, 1.0, 100.0])
    constant_K: dict | None = None


@dataclass
class RunConfig:
    metric: MetricSpec | None = None
    points: list = field(default_factory=list)
    directions: list = field(default_factory=list)
    flags: list | None = None
    schwarz: SchwarzConfig | None = None
    seed: int = 0
    tol: float = 1e-6
    samples: int | None = None
    format: str = "csv"
    out: str | None = None
    jobs: int = 1
    raw: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self):
        if not self.tol > 0:
            raise ConfigError("options.tol: must be positive")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("options.samples: must be >= 1")
        if self.jobs < 1:
            raise ConfigError("options.jobs: must be >= 1")
        if self.format not in FORMATS:
            raise ConfigError(f"options.format: expected one of {FORMATS}")
        if self.metric is not None:
            n = self.metric.dim
            for name, vecs in (("sample.x", self.points), ("sample.y", self.directions), ("sample.v", self.flags or [])):
                for k, v in enumerate(vecs):
                    if len(v) != n:
                        raise ConfigError(f"{name}[{k}]: expected {n} components, got {len(v)}")


def _check_keys(table: dict, where: str):
    allowed = _SCHEMA[where]
    for key, value in table.items():
        if key not in allowed:
            raise ConfigError(f"{where}.{key}: unknown key (allowed: {', '.join(sorted(allowed))})")
        sub = f"{where}.{key}"
        if sub in _SCHEMA:
            if not isinstance(value, dict):
                raise ConfigError(f"{sub}: expected a table")
            _check_keys(value, sub)


def _vectors(value, where: str) -> list[np.ndarray]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where}: expected a non-empty list")
    rows = value if isinstance(value[0], list) else [[v] for v in value]
    try:
        return [np.array(r, dtype=float) for r in rows]
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: entries must be numbers") from None


def _grid(table: dict, where: str, dim: int) -> list[np.ndarray]:
    try:
        lo = np.atleast_1d(np.asarray(table["min"], float))
        hi = np.atleast_1d(np.asarray(table["max"], float))
        count = np.atleast_1d(np.asarray(table["count"], int))
    except KeyError as exc:
        raise ConfigError(f"{where}.{exc.args[0]}: required") from None
    if not (lo.size == hi.size == count.size == dim):
        raise ConfigError(f"{where}: min/max/count must each have {dim} entries")
    if np.any(count < 1):
        raise ConfigError(f"{where}.count: must be >= 1")
    axes = [np.linspace(a, b, c) for a, b, c in zip(lo, hi, count)]
    # first axis slowest
    return [np.array(p) for p in zip(*(m.ravel() for m in np.meshgrid(*axes, indexing="ij")))]


def _expr_field(src, where: str, dim: int):
    if isinstance(src, bool) or not isinstance(src, (str, int, float)):
        raise ConfigError(f"{where}: expected an expression string")
    if not isinstance(src, str):
        return exprdsl.const(float(src))
    try:
        return exprdsl.parse(src, dim)
    except FinslerError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _metric(table: dict) -> MetricSpec:
    family = table.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"metric.family: expected one of {FAMILIES}, got {family!r}")
    dim = table.get("dim", 1 if family == "numata1d" else None)
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError("metric.dim: required positive integer")
    needed = {"riemannian": {"a"}, "randers": {"b"}, "numata": {"f"}, "numata1d": {"f"}}[family]
    allowed = needed | {"family", "dim"} | ({"a"} if family == "randers" else set()) | (
        {"cone"} if family == "numata1d" else set()
    )
    for key in table:
        if key not in allowed:
            raise ConfigError(f"metric.{key}: not used by family {family!r}")
    for key in needed:
        if key not in table:
            raise ConfigError(f"metric.{key}: required for family {family!r}")
    try:
        if family in ("riemannian", "randers"):
            a = table.get("a")
            if a is not None:
                if not isinstance(a, list) or len(a) != dim or any(not isinstance(r, list) or len(r) != dim for r in a):
                    raise ConfigError(f"metric.a: expected a {dim}x{dim} array")
                a = [[_expr_field(s, f"metric.a[{i}][{j}]", dim) for j, s in enumerate(r)] for i, r in enumerate(a)]
                a = tuple(tuple(r) for r in a)
            elif family == "randers":
                a = tuple(tuple(exprdsl.const(1.0 if i == j else 0.0) for j in range(dim)) for i in range(dim))
            if family == "riemannian":
                return MetricSpec(dim, family, a=a)
            b = table["b"]
            if not isinstance(b, list) or len(b) != dim:
                raise ConfigError(f"metric.b: expected {dim} entries")
            return MetricSpec(dim, family, a=a, b=tuple(_expr_field(s, f"metric.b[{i}]", dim) for i, s in enumerate(b)))
        f = _expr_field(table["f"], "metric.f", dim)
        if family == "numata1d":
            return MetricSpec(1, family, f=f, cone=_cone(table.get("cone", "+")))
        return MetricSpec(dim, family, f=f)
    except ConfigError:
        raise
    except FinslerError as exc:
        raise ConfigError(f"metric: {exc}") from None


def _schwarz(table: dict) -> SchwarzConfig:
    sc = SchwarzConfig()
    modes = [k for k in ("phi", "f", "constant_K") if k in table]
    if len(modes) != 1:
        raise ConfigError("schwarz: give exactly one of phi, f or constant_K")
    if "phi" in table:
        sc.phi = _expr_field(table["phi"], "schwarz.phi", 1)
    if "f" in table:
        sc.f = _expr_field(table["f"], "schwarz.f", 1)
    if "constant_K" in table:
        ck = table["constant_K"]
        missing = {"K", "a", "b", "c", "d"} - set(ck)
        if missing:
            raise ConfigError(f"schwarz.constant_K.{sorted(missing)[0]}: required")
        sc.constant_K = {k: float(ck[k]) for k in ("K", "a", "b", "c", "d")}
    try:
        sc.orientation = _cone(table.get("orientation", "+"))
    except FinslerError:
        raise ConfigError("schwarz.orientation: expected '+' or '-'") from None
    if "x" in table and "grid" in table:
        raise ConfigError("schwarz: give either x or grid, not both")
    if "x" in table:
        sc.xs = [float(v[0]) for v in _vectors(table["x"], "schwarz.x")]
    elif "grid" in table:
        sc.xs = [float(p[0]) for p in _grid(table["grid"], "schwarz.grid", 1)]
    else:
        raise ConfigError("schwarz: x or grid required")
    if "y" in table:
        sc.ys = [float(v[0]) for v in _vectors(table["y"], "schwarz.y")]
    return sc


def from_dict(raw: dict) -> RunConfig:
    for key in raw:
        if key not in ("metric", "sample", "schwarz", "options"):
            raise ConfigError(f"{key}: unknown top-level table")
        if not isinstance(raw[key], dict):
            raise ConfigError(f"{key}: expected a table")
        _check_keys(raw[key], key)
    cfg = RunConfig(raw=raw)
    if "metric" in raw:
        cfg.metric = _metric(raw["metric"])
    sample = raw.get("sample", {})
    if sample and cfg.metric is None:
        raise ConfigError("sample: requires a [metric] table")
    if cfg.metric is not None:
        n = cfg.metric.dim
        if "x" in sample and "grid" in sample:
            raise ConfigError("sample: give either x or grid, not both")
        if "grid" in sample:
            cfg.points = _grid(sample["grid"], "sample.grid", n)
        elif "x" in sample:
            cfg.points = _vectors(sample["x"], "sample.x")
        else:
            cfg.points = [np.zeros(n)]
        if "y" in sample:
            cfg.directions = _vectors(sample["y"], "sample.y")
        else:
            cfg.directions = [np.eye(n)[0] * (cfg.metric.cone if cfg.metric.family == "numata1d" else 1)]
        if "v" in sample:
            cfg.flags = _vectors(sample["v"], "sample.v")
    if "schwarz" in raw:
        cfg.schwarz = _schwarz(raw["schwarz"])
    opts = raw.get("options", {})
    try:
        cfg.seed = int(opts.get("seed", cfg.seed))
        cfg.tol = float(opts.get("tol", cfg.tol))
        if "samples" in opts:
            cfg.samples = int(opts["samples"])
        cfg.jobs = int(opts.get("jobs", cfg.jobs))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"options: {exc}") from None
    cfg.format = str(opts.get("format", cfg.format))
    cfg.out = opts.get("out")
    cfg.validate()
    return cfg


def load(path: str | Path) -> RunConfig:
    text = Path(path).read_text()
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # message carries "(at line L, column C)"
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(raw)
