"""
Sweep driver: JSON config in, CSV/JSON curves and a scan manifest out.

Subcommands
-----------
two-threshold    lambda_+^cr over a lambda_- grid for a strength family
three-threshold  two- and three-body thresholds and the Borromean window
h-curve          hard-core threshold volume h(s)
window-scan      closed-form square-well window estimates over s
fig1 | fig2 | fig2a | fig3
                 the figure curves with their default grids

Config document (every key optional unless the subcommand needs it; unknown
keys are rejected)::

    {
      "potential": {"type": "GaussianSum", "terms": [[1.0, 1.0], [-2.0, 0.5]]},
      "scan": {"variable": "lambda_minus",
               "grid": {"min": 0.05, "max": 1.2, "count": 12, "spacing": "linear"}},
      "solvers": {"twobody": {"tol": 1e-8, "n": 4000, "method": "IntegralEq"},
                  "svm": {"basis_budget": 60, "seed": 0, "trials": 30, "tol": 1e-3},
                  "hyperradial": {"f_mu": 2.0, "f_V": 3.0, "f_R": 0.5, "reduction": 0.6667}},
      "output": {"directory": "out", "formats": ["csv", "json"]}
    }

Exit codes: 0 success, 2 config error, 3 every point failed to converge,
4 partial scan (the manifest lists the failed points).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__, hyperradial, threebody, twobody
from .potentials import (CoreWell, PotentialSpec, SquareWellBarrier, StrengthFamily,
                         fig3_shape, spec_from_dict)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_PARTIAL = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

_SOLVER_DEFAULTS = {
    "twobody": {"tol": 1e-8, "n": 4000, "method": "IntegralEq"},
    "svm": {"basis_budget": 60, "seed": None, "trials": 30, "tol": 1e-3},
    "hyperradial": {"f_mu": 2.0, "f_V": 3.0, "f_R": 0.5, "reduction": 2.0 / 3.0},
}
_TOP_KEYS = {"potential", "scan", "solvers", "output"}
_SPACINGS = ("linear", "log")


@dataclass
class SweepConfig:
    potential: Optional[dict]
    variable: Optional[str]
    grid: list[float]
    solvers: dict
    directory: str = "out"
    formats: tuple[str, ...] = ("csv",)

    @property
    def seed(self) -> Optional[int]:
        return self.solvers["svm"]["seed"]

    def to_dict(self) -> dict:
        return {"potential": self.potential, "scan": {"variable": self.variable, "grid": self.grid},
                "solvers": self.solvers, "output": {"directory": self.directory,
                                                    "formats": list(self.formats)}}

    def digest(self, command: str) -> str:
        # the output directory does not change any number
        d = self.to_dict()
        d.pop("output")
        d["command"] = command
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()


def _check_keys(d: dict, allowed, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def expand_grid(grid) -> list[float]:
    """Explicit list or ``{min, max, count, spacing}`` to a list of floats."""
    if isinstance(grid, dict):
        _check_keys(grid, {"min", "max", "count", "spacing"}, "scan.grid")
        try:
            lo, hi, n = float(grid["min"]), float(grid["max"]), int(grid["count"])
        except KeyError as exc:
            raise ConfigError(f"scan.grid needs {exc.args[0]!r}") from None
        spacing = grid.get("spacing", "linear")
        if spacing not in _SPACINGS:
            raise ConfigError(f"spacing must be one of {_SPACINGS}")
        if n < 1:
            raise ConfigError("grid count must be positive")
        if spacing == "log":
            if lo <= 0:
                raise ConfigError("log spacing needs a positive minimum")
            values = np.geomspace(lo, hi, n)
        else:
            values = np.linspace(lo, hi, n)
        values = [float(v) for v in values]
    elif isinstance(grid, (list, tuple)):
        values = [float(v) for v in grid]
    else:
        raise ConfigError("scan.grid must be a list or an object")
    if not values:
        raise ConfigError("scan grid is empty")
    if any(b <= a for a, b in zip(values[:-1], values[1:])):
        raise ConfigError("scan grid must be strictly increasing")
    return values


def parse_config(raw: Optional[dict]) -> SweepConfig:
    raw = {} if raw is None else raw
    _check_keys(raw, _TOP_KEYS, "config")
    potential = raw.get("potential")
    if potential is not None:
        try:
            spec_from_dict(potential)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"potential: {exc}") from None
    scan = raw.get("scan", {})
    _check_keys(scan, {"variable", "grid"}, "scan")
    grid = expand_grid(scan["grid"]) if "grid" in scan else []
    solvers = {k: dict(v) for k, v in _SOLVER_DEFAULTS.items()}
    given = raw.get("solvers", {})
    _check_keys(given, solvers, "solvers")
    for name, block in given.items():
        _check_keys(block, solvers[name], f"solvers.{name}")
        solvers[name].update(block)
    for name in ("twobody", "svm"):
        if not float(solvers[name]["tol"]) > 0:
            raise ConfigError(f"solvers.{name}.tol must be positive")
    try:
        twobody.Method(solvers["twobody"]["method"])
    except ValueError:
        raise ConfigError(f"unknown two-body method {solvers['twobody']['method']!r}") from None
    out = raw.get("output", {})
    _check_keys(out, {"directory", "formats"}, "output")
    formats = tuple(out.get("formats", ["csv"]))
    if not formats or set(formats) - {"csv", "json"}:
        raise ConfigError("output.formats must be a nonempty subset of {csv, json}")
    return SweepConfig(potential, scan.get("variable"), grid, solvers,
                       str(out.get("directory", "out")), formats)


# ---------------------------------------------------------------------------
# per-point tasks (module level so that worker processes can pickle them)
# ---------------------------------------------------------------------------

def _family(potential: dict) -> StrengthFamily:
    return StrengthFamily(spec_from_dict(potential))


def _task_two(potential: dict, lm: float, solvers: dict) -> dict:
    tb = solvers["twobody"]
    fam = _family(potential)
    pt = twobody.critical_lambda_plus(fam, lm, tol=tb["tol"], method=tb["method"], n=tb["n"])
    row = {"lambda_minus": lm, "lambda_plus_cr": pt.lambda_plus_cr, "method": pt.method.value,
           "residual": pt.residual}
    try:
        row["weak_limit"] = twobody.weak_limit_lambda_plus(fam, lm)
    except ZeroDivisionError:
        row["weak_limit"] = math.inf
    return row


def _task_three(potential: dict, lm: float, solvers: dict) -> dict:
    svm = solvers["svm"]
    fam = _family(potential)
    w = threebody.borromean_scan(fam, [lm], tol=svm["tol"], basis_budget=svm["basis_budget"],
                                 seed=svm["seed"], trials=svm["trials"])[0]
    return {"lambda_minus": lm, "lambda_plus_cr": w.lambda_plus_cr, "Lambda_plus_cr": w.Lambda_plus_cr,
            "delta_shell": lm, "window_open": w.window_open, "three_halves_ok": w.three_halves_ok,
            "basis_size": w.basis_size, "residual": w.residual}


def _task_h(s: float) -> dict:
    h = twobody.h_of_s(s)
    return {"s": s, "h": h, "residual": abs(twobody.deep_core_residual(h, s))}


def _task_fig2(model: str, lm: float, solvers: dict) -> dict:
    spec = SquareWellBarrier(lm, 0.0) if model == "barrier" else CoreWell(0.0, lm)
    pt = twobody.analytic_lambda_plus_cr(model, lm, spec.Rs, spec.Rl, rtol=solvers["twobody"]["tol"])
    weak = twobody.weak_limit_lambda_plus(StrengthFamily(spec), lm)
    return {"model": model, "lambda_minus": lm, "lambda_plus_cr": pt.lambda_plus_cr,
            "weak_limit": weak, "lambda_minus_cr": twobody.lambda_minus_cr(model, spec.Rs, spec.Rl),
            "residual": pt.residual}


def _run_task(task: tuple) -> tuple[str, dict, float]:
    kind, args = task[0], task[1:]
    fn = {"two": _task_two, "three": _task_three, "h": _task_h, "fig2": _task_fig2}[kind]
    t0 = time.perf_counter()
    try:
        row = fn(*args)
        status = "ok"
    except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        row, status = {}, f"failed: {type(exc).__name__}: {exc}"
    return status, row, time.perf_counter() - t0


def _execute(tasks: Sequence[tuple], jobs: int) -> list[tuple[str, dict, float]]:
    """Run tasks in order; with ``jobs > 1`` a process pool keeps the grid order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v: Any, text: bool = True) -> Any:
    """CSV text (``text``) or JSON-safe value; non-finite floats become strings."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "inf" if v > 0 else "-inf" if v < 0 else "nan"
        return repr(v) if text else v
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _jfmt(v: Any) -> Any:
    return _fmt(v, text=False)


def write_table(path_stem: Path, columns: Sequence[str], rows: Sequence[dict],
                formats: Sequence[str]) -> list[str]:
    files = []
    if "csv" in formats:
        p = path_stem.with_suffix(".csv")
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for r in rows:
                w.writerow(["" if r.get(c) is None else _fmt(r.get(c)) for c in columns])
        files.append(str(p))
    if "json" in formats:
        p = path_stem.with_suffix(".json")
        with open(p, "w") as fh:
            json.dump([{c: _jfmt(r.get(c)) for c in columns} for r in rows], fh, indent=1)
        files.append(str(p))
    return files


@dataclass
class ScanManifest:
    command: str
    config_digest: str
    tool_version: str
    seed: Optional[int]
    jobs: int
    points: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    exit_code: int = EXIT_OK

    def write(self, directory: Path) -> str:
        p = directory / f"{self.command}_manifest.json"
        with open(p, "w") as fh:
            json.dump(asdict(self), fh, indent=1, default=_jfmt)
        return str(p)


def _scan_rows(tasks, labels, jobs, manifest):
    results = _execute(tasks, jobs)
    rows = []
    for label, (status, row, wall) in zip(labels, results):
        row = dict(row)
        row.update(label)
        row["status"] = status
        rows.append(row)
        manifest.points.append({**{k: _jfmt(v) for k, v in label.items()}, "status": status,
                                "wall_time": wall})
    return rows


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_DEFAULT_GRIDS = {
    "fig1": list(np.geomspace(1e-4, 0.99, 60)),
    "fig2": list(np.linspace(0.1, 5.6, 40)),
    "fig2a": list(np.linspace(0.02, 0.9, 45)),
    "fig3": [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.2],
    "window-scan": list(np.linspace(0.05, 0.9, 18)),
    "h-curve": list(np.geomspace(1e-4, 0.99, 60)),
}


def _grid(cfg: SweepConfig, command: str) -> list[float]:
    if cfg.grid:
        return cfg.grid
    if command in _DEFAULT_GRIDS:
        return [float(v) for v in _DEFAULT_GRIDS[command]]
    raise ConfigError(f"{command} needs scan.grid")


def _need_potential(cfg: SweepConfig, command: str, default: Optional[PotentialSpec] = None) -> dict:
    if cfg.potential is not None:
        return cfg.potential
    if default is not None:
        return default.to_dict()
    raise ConfigError(f"{command} needs a potential")


def _need_seed(cfg: SweepConfig):
    if cfg.seed is None:
        raise ConfigError("the three-body solver needs solvers.svm.seed or --seed")


def run_two_threshold(cfg, out, jobs, manifest, command="two-threshold", default=None):
    pot = _need_potential(cfg, command, default)
    grid = _grid(cfg, command)
    tasks = [("two", pot, lm, cfg.solvers) for lm in grid]
    rows = _scan_rows(tasks, [{"lambda_minus": lm} for lm in grid], jobs, manifest)
    cols = ["lambda_minus", "lambda_plus_cr", "weak_limit", "method", "residual", "status"]
    return write_table(out / command, cols, rows, cfg.formats)


def run_three_threshold(cfg, out, jobs, manifest, command="three-threshold", default=None):
    pot = _need_potential(cfg, command, default)
    _need_seed(cfg)
    grid = _grid(cfg, command)
    tasks = [("three", pot, lm, cfg.solvers) for lm in grid]
    rows = _scan_rows(tasks, [{"lambda_minus": lm} for lm in grid], jobs, manifest)
    cols = ["lambda_minus", "lambda_plus_cr", "Lambda_plus_cr", "delta_shell", "window_open",
            "three_halves_ok", "basis_size", "residual", "status"]
    return write_table(out / command, cols, rows, cfg.formats)


def run_h_curve(cfg, out, jobs, manifest, command="h-curve"):
    grid = _grid(cfg, command)
    if any(not 0 < s < 1 for s in grid):
        raise ConfigError("s values must lie in (0, 1)")
    rows = _scan_rows([("h", s) for s in grid], [{"s": s} for s in grid], jobs, manifest)
    return write_table(out / command, ["s", "h", "residual", "status"], rows, cfg.formats)


def run_fig1(cfg, out, jobs, manifest):
    grid = _grid(cfg, "fig1")
    if any(not 0 < s < 1 for s in grid):
        raise ConfigError("s values must lie in (0, 1)")
    rows = _scan_rows([("h", s) for s in grid], [{"s": s} for s in grid], jobs, manifest)
    deep = twobody.deep_barrier_limit(2) ** 2
    for r in rows:
        r["deep_barrier"] = deep
    return write_table(out / "fig1", ["s", "h", "deep_barrier", "residual", "status"], rows, cfg.formats)


def run_fig2(cfg, out, jobs, manifest):
    grid = _grid(cfg, "fig2")
    tasks, labels = [], []
    for model in ("barrier", "core"):
        cap = twobody.lambda_minus_cr(model)
        for lm in grid:
            if lm < cap:
                tasks.append(("fig2", model, lm, cfg.solvers))
                labels.append({"model": model, "lambda_minus": lm})
    rows = _scan_rows(tasks, labels, jobs, manifest)
    cols = ["model", "lambda_minus", "lambda_plus_cr", "weak_limit", "lambda_minus_cr", "residual", "status"]
    files = write_table(out / "fig2", cols, rows, cfg.formats)
    asym = [{"model": m, "Rs": 1.0, "Rl": 2.0, "lambda_minus_cr": twobody.lambda_minus_cr(m)}
            for m in ("barrier", "core")]
    files += write_table(out / "fig2_asymptotes", ["model", "Rs", "Rl", "lambda_minus_cr"], asym,
                         cfg.formats)
    return files


def run_window_scan(cfg, out, jobs, manifest, command="window-scan"):
    grid = _grid(cfg, command)
    hr = cfg.solvers["hyperradial"]
    try:
        ests = hyperradial.window_estimates(grid, f_mu=hr["f_mu"], f_V=hr["f_V"], f_R=hr["f_R"],
                                            reduction=hr["reduction"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = []
    for e in ests:
        lo, hi = e.window if e.window is not None else (None, None)
        rows.append({"s": e.s, "variant": e.variant.value, "h2_threshold": e.h2_threshold,
                     "h3_over_factor": e.h3_over_factor, "window_lo": lo, "window_hi": hi,
                     "status": "ok"})
    for s in grid:
        manifest.points.append({"s": s, "status": "ok", "wall_time": 0.0})
    cols = ["s", "variant", "h2_threshold", "h3_over_factor", "window_lo", "window_hi", "status"]
    return write_table(out / command, cols, rows, cfg.formats)


def run_fig2a(cfg, out, jobs, manifest):
    grid = _grid(cfg, "fig2a")
    if any(not 0 < s < 1 for s in grid):
        raise ConfigError("s values must lie in (0, 1)")
    curves = hyperradial.fig2a_curves(grid)
    rows = [{k: curves[k][i] for k in curves} | {"status": "ok"} for i in range(len(grid))]
    for s in grid:
        manifest.points.append({"s": s, "status": "ok", "wall_time": 0.0})
    cols = ["s", "h2_threshold", "h3_dotdash", "h3_dashed", "status"]
    return write_table(out / "fig2a", cols, rows, cfg.formats)


def run_fig3(cfg, out, jobs, manifest):
    return run_three_threshold(cfg, out, jobs, manifest, command="fig3", default=fig3_shape())


_COMMANDS = {
    "two-threshold": run_two_threshold,
    "three-threshold": run_three_threshold,
    "h-curve": run_h_curve,
    "window-scan": run_window_scan,
    "fig1": run_fig1,
    "fig2": run_fig2,
    "fig2a": run_fig2a,
    "fig3": run_fig3,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="borromean2d", description="Two- and three-body threshold sweeps in 2D.")
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("--config", type=Path, help="JSON sweep configuration")
    p.add_argument("--out", type=Path, help="output directory (overrides output.directory)")
    p.add_argument("--seed", type=int, help="SVM seed (overrides solvers.svm.seed)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return p


def run(command: str, raw_config: Optional[dict] = None, out: Optional[Path] = None,
        seed: Optional[int] = None, jobs: int = 1) -> tuple[int, ScanManifest]:
    """Programmatic entry; returns ``(exit_code, manifest)``."""
    cfg = parse_config(raw_config)
    if seed is not None:
        if seed < 0 or seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg.solvers["svm"]["seed"] = seed
    if jobs < 1:
        raise ConfigError("--jobs must be positive")
    directory = Path(out) if out is not None else Path(cfg.directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = ScanManifest(command, cfg.digest(command), __version__, cfg.seed, jobs)
    t0 = time.perf_counter()
    manifest.outputs = _COMMANDS[command](cfg, directory, jobs, manifest)
    manifest.wall_time = time.perf_counter() - t0
    failed = [p for p in manifest.points if p["status"] != "ok"]
    if failed and len(failed) == len(manifest.points):
        manifest.exit_code = EXIT_SOLVER
    elif failed:
        manifest.exit_code = EXIT_PARTIAL
    manifest.outputs.append(manifest.write(directory))
    return manifest.exit_code, manifest


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    raw = None
    try:
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        code, manifest = run(args.command, raw, args.out, args.seed, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in manifest.outputs:
        print(f)
    return code


if __name__ == "__main__":
    sys.exit(main())
