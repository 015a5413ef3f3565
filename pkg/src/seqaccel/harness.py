"""Sequence experiments: solve the test-case systems with a chosen guess
strategy, record per-step telemetry and read/write CSV reports."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .krylov import GmresConfig, ZeroPivotError, gmres, ilu0_factor
from .recycle import (
    DEFAULT_REFRESH_PERIOD,
    HistoryWindow,
    basis_from_sketch,
    compute_initial_guess,
    pod_basis,
    push_solution,
    sketch_from_scratch,
    sketch_progressive_update,
)
from .testcase import Grid2d, TimeGrid, system_sequence

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "SolveRecord",
    "StepInfo",
    "RunReport",
    "Comparison",
    "run_experiment",
    "compare_runs",
    "write_report",
    "read_report",
    "load_config",
    "CSV_COLUMNS",
]

METHODS = ("baseline", "pod", "rand")
CSV_COLUMNS = ("step", "t", "iterations", "initial_residual", "final_residual", "guess_time_s", "solve_time_s")


@dataclass
class ExperimentConfig:
    nx: int = 100
    ny: int = 100
    t0: float = 2.3
    dt: float = 1e-3
    nt: int = 200
    method: str = "rand"
    M: int = 35
    m: int = 20
    refresh_period: int = DEFAULT_REFRESH_PERIOD
    tol: float = 1e-7
    max_iters: int = 500
    seed: int = 0
    output_path: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method != "baseline":
            if not 1 <= self.m <= self.M:
                raise ValueError(f"need 1 <= m <= M, got m={self.m}, M={self.M}")
        if self.refresh_period < 1:
            raise ValueError("refresh_period must be >= 1")
        GmresConfig(self.tol, self.max_iters)
        Grid2d(self.nx, self.ny)
        TimeGrid(self.t0, self.dt, self.nt)

    @property
    def grid(self) -> Grid2d:
        return Grid2d(self.nx, self.ny)

    @property
    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.t0, self.dt, self.nt)

    @property
    def gmres(self) -> GmresConfig:
        return GmresConfig(self.tol, self.max_iters)

    @property
    def warmup_steps(self) -> int:
        """Steps solved before the history window is full (previous-solution guesses)."""
        return 1 if self.method == "baseline" else self.M

    def items(self) -> list[tuple[str, str]]:
        return [(k, "" if v is None else str(v)) for k, v in asdict(self).items()]

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in kinds:
                raise ValueError(f"unknown config key {key!r}")
            kind = kinds[key]
            if raw is None or raw == "":
                kwargs[key] = None
            elif "int" in kind:
                kwargs[key] = int(raw)
            elif "float" in kind:
                kwargs[key] = float(raw)
            else:
                kwargs[key] = str(raw)
        return cls(**kwargs)


def load_config(path) -> dict:
    """Parse a flat ``key=value`` file; blank lines and ``#`` comments are skipped."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


@dataclass
class SolveRecord:
    step: int
    t: float
    iterations: int
    initial_residual: float
    final_residual: float
    guess_time_s: float
    solve_time_s: float
    guess_method: str
    converged: bool = True


@dataclass
class RunReport:
    config: ExperimentConfig
    records: list[SolveRecord] = field(default_factory=list)

    def _select(self, post_warmup: bool) -> list[SolveRecord]:
        if not post_warmup:
            return self.records
        return [r for r in self.records if r.step >= self.config.warmup_steps]

    def mean_iterations(self, post_warmup: bool = False) -> float:
        recs = self._select(post_warmup)
        return sum(r.iterations for r in recs) / len(recs) if recs else math.nan

    def mean_time(self, post_warmup: bool = False) -> float:
        recs = self._select(post_warmup)
        return sum(r.guess_time_s + r.solve_time_s for r in recs) / len(recs) if recs else math.nan

    def zero_iteration_fraction(self, post_warmup: bool = True) -> float:
        recs = self._select(post_warmup)
        return sum(r.iterations == 0 for r in recs) / len(recs) if recs else math.nan

    def aggregates(self) -> dict:
        return {
            "steps": len(self.records),
            "mean_iterations": self.mean_iterations(),
            "mean_time_s": self.mean_time(),
            "mean_iterations_post_warmup": self.mean_iterations(True),
            "mean_time_post_warmup_s": self.mean_time(True),
            "unconverged_steps": sum(not r.converged for r in self.records),
        }


def _guess_label(cfg: ExperimentConfig, step: int) -> str:
    if step == 0:
        return "zero"
    if cfg.method == "baseline" or step < cfg.M:
        return "previous"
    return cfg.method


@dataclass
class StepInfo:
    """Everything a step saw, handed to the optional ``run_experiment`` callback."""

    record: SolveRecord
    A: object
    b: np.ndarray
    guess: np.ndarray
    x: np.ndarray
    Q: Optional[np.ndarray]


def _warm_kernels():
    # compile (or load cached) numba kernels outside the timed region
    from .linalg import SparseCsrMatrix, qr_reduced, svd_thin

    A = SparseCsrMatrix.from_dense(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    ilu0_factor(A).solve(np.ones(2))
    qr_reduced(np.eye(2))
    svd_thin(np.eye(2))


def run_experiment(cfg: ExperimentConfig, callback: Optional[Callable[[StepInfo], None]] = None) -> RunReport:
    """Solve the configured system sequence, one timestep after another.

    ``callback`` (if given) is called after every step with a :class:`StepInfo`.
    """
    cfg.validate()
    _warm_kernels()
    grid, gcfg = cfg.grid, cfg.gmres
    rng = np.random.default_rng(cfg.seed)
    report = RunReport(config=cfg)
    window = HistoryWindow(grid.n, cfg.M) if cfg.method != "baseline" else None
    sketch = None
    pending = None  # (evicted, pushed) not yet folded into the sketch
    x_prev = np.zeros(grid.n)

    for step, (t, A, b) in enumerate(system_sequence(grid, cfg.time_grid)):
        label = _guess_label(cfg, step)
        Q = None
        t_guess = time.perf_counter()
        if label in ("zero", "previous"):
            guess = x_prev
        else:
            if label == "pod":
                Q = pod_basis(window, cfg.m)
            else:
                if sketch is None:
                    sketch = sketch_from_scratch(window, cfg.m, rng, cfg.refresh_period)
                elif pending is not None:
                    sketch = sketch_progressive_update(sketch, *pending, rng, window=window)
                pending = None
                Q = basis_from_sketch(sketch)
            guess = compute_initial_guess(A, b, Q).guess
        guess_time = time.perf_counter() - t_guess

        t_solve = time.perf_counter()
        try:
            prec = ilu0_factor(A)
        except ZeroPivotError as exc:
            log.warning("step %d: %s; solving without preconditioner", step, exc)
            prec = None
        x, stats = gmres(A, b, guess, prec, gcfg)
        solve_time = time.perf_counter() - t_solve
        if not stats.converged:
            log.warning("step %d (t=%.6g) did not converge", step, t)

        record = SolveRecord(
            step=step, t=t, iterations=stats.iterations, initial_residual=stats.initial_residual,
            final_residual=stats.final_residual, guess_time_s=guess_time, solve_time_s=solve_time,
            guess_method=label, converged=stats.converged)
        report.records.append(record)
        if callback is not None:
            callback(StepInfo(record=record, A=A, b=b, guess=guess, x=x, Q=Q))
        if window is not None:
            evicted = push_solution(window, x)
            if evicted is not None and sketch is not None:
                pending = (evicted, x)
        x_prev = x

    if cfg.output_path:
        write_report(report, cfg.output_path)
    return report


@dataclass
class Comparison:
    """One row in the layout of a speedup table."""

    M: int
    m: int
    mean_time_s: float
    time_speedup: float
    mean_iterations: float
    iteration_speedup: float

    HEADER = ("M", "m", "Average time per timestep [s]", "Time speedup",
              "Average GMRES iterations per timestep", "Iterations speedup")

    def row(self) -> tuple:
        return (self.M, self.m, self.mean_time_s, self.time_speedup, self.mean_iterations, self.iteration_speedup)

    def format(self) -> str:
        return " | ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in self.row())


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


def compare_runs(baseline: RunReport, method: RunReport, post_warmup: bool = False) -> Comparison:
    """Speedups of ``method`` over ``baseline`` as ratios of per-step means.

    With ``post_warmup`` both runs are restricted to the steps where
    ``method`` already has a full history window.
    """
    a, b = baseline.config, method.config
    if (a.nx, a.ny, a.nt) != (b.nx, b.ny, b.nt) or len(baseline.records) != len(method.records):
        raise ValueError("runs differ in grid or number of timesteps")
    first = b.warmup_steps if post_warmup else 0
    sel_base = [r for r in baseline.records if r.step >= first]
    sel_meth = [r for r in method.records if r.step >= first]

    def mean(recs, key):
        return sum(key(r) for r in recs) / len(recs) if recs else math.nan

    it_b, it_m = mean(sel_base, lambda r: r.iterations), mean(sel_meth, lambda r: r.iterations)
    tm_b = mean(sel_base, lambda r: r.guess_time_s + r.solve_time_s)
    tm_m = mean(sel_meth, lambda r: r.guess_time_s + r.solve_time_s)
    return Comparison(M=b.M, m=b.m, mean_time_s=tm_m, time_speedup=_ratio(tm_b, tm_m),
                      mean_iterations=it_m, iteration_speedup=_ratio(it_b, it_m))


def write_report(r: RunReport, path) -> None:
    """CSV with ``# key=value`` config lines, a header row and one row per step."""
    path = Path(path)
    lines = [f"# {k}={v}" for k, v in r.config.items() if k != "output_path"]
    bad = [str(rec.step) for rec in r.records if not rec.converged]
    lines.append(f"# unconverged_steps={','.join(bad)}")
    lines.append(",".join(CSV_COLUMNS))
    for rec in r.records:
        lines.append(",".join([
            str(rec.step), f"{rec.t:.17e}", str(rec.iterations),
            f"{rec.initial_residual:.17e}", f"{rec.final_residual:.17e}",
            f"{rec.guess_time_s:.17e}", f"{rec.solve_time_s:.17e}",
        ]))
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def read_report(path) -> RunReport:
    """Inverse of :func:`write_report`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read report {path}: {exc}") from exc
    values, rows, header = {}, [], None
    unconverged: set[int] = set()
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key == "unconverged_steps":
                unconverged = {int(s) for s in value.split(",") if s}
            else:
                values[key] = value
        elif header is None:
            header = tuple(line.split(","))
            if header != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected header {line!r}")
        elif line:
            rows.append(line.split(","))
    cfg = ExperimentConfig.from_mapping(values)
    cfg.output_path = str(path)
    report = RunReport(config=cfg)
    for row in rows:
        step = int(row[0])
        report.records.append(SolveRecord(
            step=step, t=float(row[1]), iterations=int(row[2]), initial_residual=float(row[3]),
            final_residual=float(row[4]), guess_time_s=float(row[5]), solve_time_s=float(row[6]),
            guess_method=_guess_label(cfg, step), converged=step not in unconverged))
    return report
