"""Experiment drivers behind the command-line interface.

Every driver writes plain CSV tables (one header line, floats with 12
significant digits) plus a ``summary.json`` whose keys are the same for all
subcommands.
"""

import csv
import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .bath import propagate_open_cm
from .config import ConfigError, ExperimentConfig, ScanSpec
from .dynamics import ControlField, TimeGrid, propagate_cm
from .gaussian import cm_distance, log_negativity, two_mode_squeezed_cm, vacuum_cm
from .krotov import KrotovResult, optimize, qsl_time
from .optomech import build_generator
from .spectral import amplitude_report, dct_forward

log = logging.getLogger(__name__)

SUMMARY_KEYS = (
    "command",
    "final_d2",
    "final_negativity",
    "target_negativity",
    "negativity_ratio",
    "iterations",
    "converged",
    "status",
    "t_qsl",
)


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_summary(path: Path, **values) -> dict:
    unknown = set(values) - set(SUMMARY_KEYS)
    if unknown:
        raise KeyError(f"undocumented summary keys: {sorted(unknown)}")
    summary = {k: values.get(k) for k in SUMMARY_KEYS}
    for k, v in summary.items():
        if isinstance(v, float) and not math.isfinite(v):
            summary[k] = None
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return summary


def read_field(path, grid: Optional[TimeGrid] = None) -> ControlField:
    """Load a two-column (t, f) CSV; checks it against ``grid`` when given."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty file; reported below
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from None
    if data.shape[0] < 3 or data.shape[1] != 2:
        raise ConfigError(f"field file {path} needs >= 3 rows of (t, f), got shape {data.shape}")
    t, f = data[:, 0], data[:, 1]
    file_grid = TimeGrid(float(t[-1]), t.size - 1)
    if not np.allclose(t, file_grid.times, rtol=0, atol=1e-9 * max(1.0, file_grid.t_f)):
        raise ConfigError(f"field file {path} is not on a uniform grid starting at 0")
    if grid is not None and (grid.n_steps != file_grid.n_steps or abs(grid.t_f - file_grid.t_f) > 1e-9 * grid.t_f):
        raise ConfigError(
            f"field file {path} has grid (t_f={file_grid.t_f}, n={file_grid.n_steps}), "
            f"config needs (t_f={grid.t_f}, n={grid.n_steps})"
        )
    return ControlField(grid or file_grid, f)


def write_field(path: Path, field: ControlField) -> None:
    write_csv(path, ("t", "f"), zip(field.times, field.values))


def field_spectrum(field: ControlField):
    # the transform covers the first n_steps nodes
    return dct_forward(field.values[:-1], field.grid.t_f)


def write_spectrum(path: Path, field: ControlField) -> None:
    write_csv(path, ("omega", "amplitude"), amplitude_report(field_spectrum(field)))


def _negativities(cms) -> np.ndarray:
    return np.array([log_negativity(c) for c in cms])


def write_dynamics(path: Path, grid: TimeGrid, cms, target) -> np.ndarray:
    neg = _negativities(cms)
    n_t = log_negativity(target)
    ratio = neg / n_t if n_t > 0 else np.full_like(neg, np.nan)
    d2 = [cm_distance(c, target) for c in cms]
    write_csv(
        path,
        ("t", "negativity", "negativity_over_target", "d2_to_target"),
        zip(grid.times, neg, ratio, d2),
    )
    return neg


def _t_qsl(cfg: ExperimentConfig) -> float:
    try:
        return qsl_time(cfg.r, cfg.G)
    except ValueError:
        return float("nan")


def _grid(cfg: ExperimentConfig) -> TimeGrid:
    return TimeGrid(cfg.t_f, cfg.n_steps)


def _guess(cfg: ExperimentConfig, grid: TimeGrid) -> ControlField:
    if cfg.guess_file:
        return read_field(cfg.guess_file, grid)
    return ControlField.constant(grid, cfg.guess_value)


def optimize_config(cfg: ExperimentConfig, callback=None) -> KrotovResult:
    grid = _grid(cfg)
    return optimize(
        build_generator(cfg.params()),
        grid,
        vacuum_cm(),
        two_mode_squeezed_cm(cfg.r),
        guess=_guess(cfg, grid),
        shape=cfg.shape,
        config=cfg.krotov(),
        callback=callback,
    )


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_optimize(cfg: ExperimentConfig) -> dict:
    """Optimize and write field, iterations, dynamics, spectrum and summary files."""
    out = _out(cfg)
    grid = _grid(cfg)
    result = optimize_config(cfg)
    target = two_mode_squeezed_cm(cfg.r)
    write_field(out / "field.csv", result.field)
    write_csv(
        out / "iterations.csv",
        ("iter", "d2", "field_update_norm"),
        ((r.iter, r.d2, r.field_update_norm) for r in result.records),
    )
    neg = write_dynamics(out / "dynamics.csv", grid, result.trajectory, target)
    write_spectrum(out / "spectrum.csv", result.field)
    n_t = log_negativity(target)
    return write_summary(
        out / "summary.json",
        command="optimize",
        final_d2=result.final_d2,
        final_negativity=float(neg[-1]),
        target_negativity=n_t,
        negativity_ratio=float(neg[-1] / n_t) if n_t > 0 else None,
        iterations=result.iterations,
        converged=result.converged,
        status=result.status,
        t_qsl=_t_qsl(cfg),
    )


def propagate_config(cfg: ExperimentConfig, field: ControlField):
    """Closed or open (when the config has a bath) propagation from vacuum.

    Returns ``(cms, obar_or_None)``.
    """
    grid = field.grid
    gen = build_generator(cfg.params())
    bath = cfg.bath_spec()
    if bath is None:
        return propagate_cm(gen, field, grid, vacuum_cm()), None
    traj = propagate_open_cm(gen, field, grid, bath.build(), vacuum_cm())
    return traj.cms, traj.obar


def run_propagate(cfg: ExperimentConfig, field_file: Optional[str] = None) -> dict:
    out = _out(cfg)
    grid = _grid(cfg)
    field = read_field(field_file, grid) if field_file else _guess(cfg, grid)
    cms, obar = propagate_config(cfg, field)
    target = two_mode_squeezed_cm(cfg.r)
    neg = write_dynamics(out / "dynamics.csv", grid, cms, target)
    if obar is not None:
        header = ["t"]
        for i in range(obar.shape[1]):
            header += [f"re_o{i}", f"im_o{i}"]
        rows = (
            [t] + [v for z in row for v in (z.real, z.imag)]
            for t, row in zip(grid.times, obar)
        )
        write_csv(out / "obar.csv", header, rows)
    n_t = log_negativity(target)
    return write_summary(
        out / "summary.json",
        command="propagate",
        final_d2=cm_distance(cms[-1], target),
        final_negativity=float(neg[-1]),
        target_negativity=n_t,
        negativity_ratio=float(neg[-1] / n_t) if n_t > 0 else None,
        status="propagated",
        t_qsl=_t_qsl(cfg),
    )


def run_spectrum(field_file: str, out_dir: str) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    field = read_field(field_file)
    write_spectrum(out / "spectrum.csv", field)
    return write_summary(out / "summary.json", command="spectrum", status="done")


def worker_count(requested: Optional[int] = None) -> int:
    if requested:
        return max(1, requested)
    env = os.environ.get("CVK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"CVK_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


SCAN_COLUMNS = ("final_negativity", "N_over_NT", "converged", "iterations", "t_qsl", "error")


def _scan_point(spec: ScanSpec, v1, v2, replay: Optional[KrotovResult]):
    cfg = spec.point(v1, v2)
    n_t = log_negativity(two_mode_squeezed_cm(cfg.r))
    try:
        if replay is not None:
            cms, _ = propagate_config(cfg, replay.field)
            result = replay
        else:
            result = optimize_config(replace(cfg, bath=False))
            cms = result.trajectory
        n_final = log_negativity(cms[-1])
        return (v1, v2, n_final, n_final / n_t if n_t > 0 else float("nan"),
                result.converged, result.iterations, _t_qsl(cfg), "")
    except (ArithmeticError, ValueError) as exc:
        log.warning("scan point (%g, %g) failed: %s", v1, v2, exc)
        msg = str(exc).replace(",", ";").replace("\n", " ")
        return (v1, v2, float("nan"), float("nan"), False, 0, _t_qsl(cfg), msg)


def scan_rows(spec: ScanSpec, threads: Optional[int] = None, replay: Optional[KrotovResult] = None):
    """Compute every grid point; rows come back in grid order regardless of scheduling."""
    if spec.replays_field and replay is None:
        closed = replace(spec.template, bath=False)
        if closed.guess_file:
            grid = _grid(closed)
            replay = KrotovResult(read_field(closed.guess_file, grid), status="replayed")
        else:
            replay = optimize_config(closed)
            log.info("scan replays a field optimized to d2 = %.3g (%s)", replay.final_d2, replay.status)
    points = [(v1, v2) for v1 in spec.axis1.values for v2 in spec.axis2.values]
    with ThreadPoolExecutor(max_workers=worker_count(threads)) as pool:
        return list(pool.map(lambda p: _scan_point(spec, p[0], p[1], replay), points))


def run_scan(spec: ScanSpec, threads: Optional[int] = None) -> dict:
    out = _out(spec.template)
    rows = scan_rows(spec, threads)
    write_csv(out / "scan.csv", (spec.axis1.name, spec.axis2.name) + SCAN_COLUMNS, rows)
    failed = sum(1 for r in rows if r[-1])
    return write_summary(
        out / "summary.json",
        command="scan",
        status="done" if not failed else f"{failed} points failed",
    )
