"""Command line: ``finslerjet {curvature,schwarz,verify,sweep}``.

Exit status: 0 on success, 1 when a tolerance check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, config as cfgmod
from .curvature import flag_curvature, hh_curvature, random_flags
from .errors import ConeMismatch, ConfigError, FinslerError
from .numata import NumataData, numata_K
from .schwarz import CircleMap, admissible_interval, constant_K_map, one_dim_K, phi_from_f, schwarzian
from .verification import TOLERANCES, group_config_metric, run_suite

DEFAULT_FLAGS = 4
ROUTE_NOTE = "numata1d rows use the Schwarzian route; the flag pipeline is bypassed (n = 1)"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v) + 0.0, ".17g")
    return str(v)


def _json_num(v):
    if v is None or isinstance(v, str):
        return v
    v = float(v) + 0.0
    return v if np.isfinite(v) else repr(v)


class Report:
    """Header block plus ordered rows; rendered as CSV or JSON."""

    def __init__(self, command: str, cfg: cfgmod.RunConfig, columns: list[str]):
        self.columns = columns
        self.rows: list[list] = []
        self.notes: list[str] = []
        self.header = {
            "tool": f"finslerjet {__version__}",
            "command": command,
            "config_sha256": cfg.digest,
            "seed": cfg.seed,
            "tol": cfg.tol,
            "tolerances": dict(sorted(TOLERANCES.items())),
        }

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = {
                "header": {**self.header, "notes": self.notes},
                "columns": self.columns,
                "rows": [dict(zip(self.columns, map(_json_num, r))) for r in self.rows],
            }
            return json.dumps(doc, indent=2, sort_keys=False) + "\n"
        buf = io.StringIO()
        for key, value in self.header.items():
            if isinstance(value, dict):
                value = json.dumps(value, sort_keys=True, separators=(",", ":"))
            buf.write(f"# {key}: {value}\n")
        for note in self.notes:
            buf.write(f"# note: {note}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    @property
    def failed(self) -> bool:
        return any(r[-1] == "fail" for r in self.rows)


# -- curvature -------------------------------------------------------------------


def _status(diff, tol) -> str:
    return "ok" if diff is None or diff <= tol else "fail"


def _curvature_task(args) -> list[list]:
    """Rows for one (x, y) pair; errors are written into the row."""
    spec, x, y, flags, samples, seed, i, j, tol = args
    n = spec.dim
    blank_v = [None] * n
    closed = None
    try:
        if spec.family == "numata1d" and np.sign(y[0]) != spec.cone:
            return [[*x, *y, *blank_v, None, None, None, ConeMismatch.code]]
        if spec.family in ("numata", "numata1d"):
            closed = numata_K(NumataData(n, spec.f), x, y)
        if spec.family == "numata1d":
            K = one_dim_K(phi_from_f(spec.f, spec.cone), float(x[0]))
            diff = abs(K - closed)
            return [[*x, *y, *blank_v, K, closed, diff, _status(diff, tol)]]
        frame = hh_curvature(spec, x, y)
        vs = flags if flags is not None else random_flags(frame, samples, np.random.default_rng([seed, i, j]))
    except FinslerError as exc:
        return [[*x, *y, *blank_v, None, closed, None, exc.code]]
    rows = []
    for v in vs:
        try:
            K = flag_curvature(frame, None, v)
        except FinslerError as exc:
            rows.append([*x, *y, *v, None, closed, None, exc.code])
            continue
        diff = None if closed is None else abs(K - closed)
        rows.append([*x, *y, *v, K, closed, diff, _status(diff, tol)])
    return rows


def _sweep_task(args) -> list:
    """One summary row per (x, y): flag spread and fitted K."""
    spec, x, y, samples, seed, i, j, tol = args
    closed = K_fit = K_min = K_max = spread = None
    try:
        if spec.family == "numata":
            closed = numata_K(NumataData(spec.dim, spec.f), x, y)
        frame = hh_curvature(spec, x, y)
        vals = [flag_curvature(frame, None, v) for v in random_flags(frame, samples, np.random.default_rng([seed, i, j]))]
        K_fit, K_min, K_max = frame.K_fit, min(vals), max(vals)
        spread = K_max - K_min
    except FinslerError as exc:
        return [*x, *y, K_fit, K_min, K_max, spread, closed, None, exc.code]
    diff = None if closed is None else abs(K_fit - closed)
    status = "ok" if spread <= tol and (diff is None or diff <= tol) else "fail"
    return [*x, *y, K_fit, K_min, K_max, spread, closed, diff, status]


def _run(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        # map keeps task order, so output order is fixed by the grid
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _require_metric(cfg):
    if cfg.metric is None:
        raise ConfigError("metric: this command needs a [metric] table")
    return cfg.metric


def cmd_curvature(cfg: cfgmod.RunConfig) -> Report:
    spec = _require_metric(cfg)
    n = spec.dim
    cols = [f"x{k + 1}" for k in range(n)] + [f"y{k + 1}" for k in range(n)] + [f"v{k + 1}" for k in range(n)]
    rep = Report("curvature", cfg, cols + ["K_pipeline", "K_closed_form", "abs_diff", "status"])
    if spec.family == "numata1d":
        rep.notes.append(ROUTE_NOTE)
    samples = cfg.samples or DEFAULT_FLAGS
    tasks = [
        (spec, x, y, cfg.flags, samples, cfg.seed, i, j, cfg.tol)
        for i, x in enumerate(cfg.points)
        for j, y in enumerate(cfg.directions)
    ]
    for rows in _run(_curvature_task, tasks, cfg.jobs):
        rep.rows.extend(rows)
    return rep


def cmd_sweep(cfg: cfgmod.RunConfig) -> Report:
    """Scalar-curvature sweep: per grid point, the spread of K over random flags."""
    spec = _require_metric(cfg)
    n = spec.dim
    cols = [f"x{k + 1}" for k in range(n)] + [f"y{k + 1}" for k in range(n)]
    rep = Report("sweep", cfg, cols + ["K_fit", "K_min", "K_max", "spread", "K_closed_form", "abs_diff", "status"])
    samples = cfg.samples or DEFAULT_FLAGS
    tasks = [
        (spec, x, y, samples, cfg.seed, i, j, cfg.tol)
        for i, x in enumerate(cfg.points)
        for j, y in enumerate(cfg.directions)
    ]
    rep.rows.extend(_run(_sweep_task, tasks, cfg.jobs))
    return rep


# -- schwarz ---------------------------------------------------------------------


def cmd_schwarz(cfg: cfgmod.RunConfig) -> Report:
    sc = cfg.schwarz
    if sc is None:
        raise ConfigError("schwarz: this command needs a [schwarz] table")
    rep = Report("schwarz", cfg, ["x", "phi_prime", "S", "K", "reference", "deviation", "status"])
    target = None
    if sc.constant_K is not None:
        ck = sc.constant_K
        try:
            m = constant_K_map(ck["K"], ck["a"], ck["b"], ck["c"], ck["d"])
        except FinslerError as exc:
            raise ConfigError(f"schwarz.constant_K: {exc}") from None
        target = ck["K"]
        rep.notes.append(f"constant-K family, K = {_fmt(target)}; reference is the target K")
        if sc.xs:
            interval = admissible_interval(m, min(sc.xs), max(sc.xs))
            rep.notes.append(
                "0 < phi' < 2 on the grid: "
                + ("nowhere" if interval is None else f"[{_fmt(interval[0])}, {_fmt(interval[1])}]")
            )
    elif sc.f is not None:
        m = phi_from_f(sc.f, sc.orientation)
        data = NumataData(1, sc.f)
        rep.notes.append("phi = f + orientation * x; reference is the closed-form Numata K, deviation is max over y")
    else:
        m = CircleMap(sc.phi, sc.orientation)
    for x in sc.xs:
        try:
            d1 = float(m.derivatives(x)[1])
            S = schwarzian(m, x)
            K = one_dim_K(m, x)
        except FinslerError as exc:
            rep.rows.append([x, None, None, None, target, None, exc.code])
            continue
        ref = dev = None
        status = "ok"
        try:
            if target is not None:
                ref, dev = target, abs(K - target)
            elif sc.f is not None:
                vals = [numata_K(data, [x], [sc.orientation * abs(y)]) for y in sc.ys]
                ref, dev = vals[0], max(abs(v - K) for v in vals)
        except FinslerError as exc:
            status = exc.code
        if dev is not None and status == "ok":
            status = _status(dev, cfg.tol)
        rep.rows.append([x, d1, S, K, ref, dev, status])
    return rep


# -- verify ----------------------------------------------------------------------


def cmd_verify(cfg: cfgmod.RunConfig) -> tuple[str, bool]:
    results = run_suite(samples=cfg.samples, seed=cfg.seed)
    if cfg.metric is not None:
        results.append(group_config_metric(cfg.metric, cfg.points, cfg.directions))
    passed = all(r.passed for r in results)
    header = {
        "tool": f"finslerjet {__version__}",
        "command": "verify",
        "config_sha256": cfg.digest,
        "seed": cfg.seed,
        "samples": "default" if cfg.samples is None else cfg.samples,
        "tolerances": dict(sorted(TOLERANCES.items())),
    }
    if cfg.format == "json":
        doc = {"header": header, "passed": passed, "groups": [r.as_dict() for r in results]}
        return json.dumps(doc, indent=2) + "\n", passed
    rep = Report("verify", cfg, ["group", "check", "worst", "tolerance", "status"])
    rep.header = header
    for r in results:
        for key in sorted(r.tolerances):
            ok = r.worst[key] < r.tolerances[key]
            rep.rows.append([r.name, key, r.worst[key], r.tolerances[key], "ok" if ok else "fail"])
        for msg in r.failures:
            if ":" in msg and msg.split(":", 1)[1].strip().startswith("E_"):
                rep.rows.append([r.name, msg.split(":", 2)[1].strip(), None, None, "fail"])
            elif msg.startswith("E_"):
                rep.rows.append([r.name, msg, None, None, "fail"])
    return rep.render("csv"), passed


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finslerjet", description="Finsler curvature by Taylor jets.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("curvature", "flag curvature rows at sample points"),
        ("schwarz", "Schwarzian and 1D curvature of a circle map"),
        ("verify", "run the property suite (JSON report)"),
        ("sweep", "scalar-curvature check over a grid"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", metavar="PATH", help="TOML run configuration")
        sp.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=cfgmod.FORMATS)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--tol", type=float, help="pass/fail threshold for report rows")
        sp.add_argument("--samples", type=int, help="flag samples per point; per-group count for verify")
        sp.add_argument("--jobs", type=int, help="worker processes for point evaluation")
    return p


def _resolve(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.from_dict({})
    for key in ("seed", "tol", "samples", "jobs", "format", "out"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    if args.command == "verify" and args.format is None and "format" not in cfg.raw.get("options", {}):
        cfg.format = "json"
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        if args.command == "verify":
            text, ok = cmd_verify(cfg)
        else:
            fn = {"curvature": cmd_curvature, "schwarz": cmd_schwarz, "sweep": cmd_sweep}[args.command]
            rep = fn(cfg)
            text, ok = rep.render(cfg.format), not rep.failed
    except (ConfigError, OSError) as exc:
        code = getattr(exc, "code", "E_IO")
        print(f"finslerjet: {code}: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
