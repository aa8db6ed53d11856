"""Memory-bounded observation of runs and ensemble statistics.

A Recorder samples N_w(t), N_d(t) and the success rate S(t) on a fixed time
grid: word counts are instantaneous at each grid time, S is the
listener-weighted average over the bin ending there (total successes over
total listeners, not a mean of per-event ratios). A bin with no listener
samples has S absent (NaN). After a run converges, remaining grid points
carry the absorbing values N_w = n, N_d = 1, S = 1, so ensemble statistics
are defined on the whole grid for every run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

LOGARITHMIC = "logarithmic"
LINEAR = "linear"


@dataclass(frozen=True)
class SampleSchedule:
    """Strictly increasing sampling times covering [t_min, t_max]."""

    grid: np.ndarray
    spacing: str = LOGARITHMIC
    points_per_decade: int | None = None

    def __post_init__(self):
        if self.grid.size == 0:
            raise ValueError("schedule grid is empty")
        if self.grid[0] <= 0:
            raise ValueError("grid times must be positive")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        self.grid.setflags(write=False)

    @classmethod
    def logarithmic(cls, t_min: float, t_max: float,
                    points_per_decade: int = 20) -> "SampleSchedule":
        if not 0 < t_min < t_max:
            raise ValueError(f"need 0 < t_min < t_max, got {t_min}, {t_max}")
        if points_per_decade < 1:
            raise ValueError("points_per_decade must be >= 1")
        # decade-aligned exponents; epsilon guards against log10 rounding
        k_lo = math.ceil(points_per_decade * math.log10(t_min) - 1e-9)
        k_hi = math.floor(points_per_decade * math.log10(t_max) + 1e-9)
        grid = 10.0 ** (np.arange(k_lo, k_hi + 1) / points_per_decade)
        if grid.size == 0 or grid[-1] < t_max:
            grid = np.append(grid, t_max)
        return cls(grid=grid, spacing=LOGARITHMIC,
                   points_per_decade=points_per_decade)

    @classmethod
    def linear(cls, t_min: float, t_max: float, num_points: int) -> "SampleSchedule":
        if not 0 < t_min < t_max:
            raise ValueError(f"need 0 < t_min < t_max, got {t_min}, {t_max}")
        if num_points < 2:
            raise ValueError("num_points must be >= 2")
        return cls(grid=np.linspace(t_min, t_max, num_points), spacing=LINEAR)


@dataclass(frozen=True)
class TimeSeriesPoint:
    t: float
    n_w: int
    n_d: int
    s: float | None


@dataclass
class RunSeries:
    """One run sampled on a grid; s holds NaN where the bin had no listeners."""

    grid: np.ndarray
    n_w: np.ndarray
    n_d: np.ndarray
    s: np.ndarray
    t_c: float | None
    converged: bool

    @property
    def points(self) -> list[TimeSeriesPoint]:
        return [TimeSeriesPoint(float(t), int(w), int(d),
                                None if math.isnan(s) else float(s))
                for t, w, d, s in zip(self.grid, self.n_w, self.n_d, self.s)]


class Recorder:
    """Accumulates step outcomes into grid bins during a run.

    Feed events through record() in nondecreasing time order; call finalize()
    once when the run stops. Emission rules (shared with engine.run_fast):
    a bin that saw at least one event reports the current word counters and
    its pooled success ratio; an empty bin after convergence reports the
    absorbing values; an empty bin before convergence repeats the last
    counters with S absent.
    """

    def __init__(self, schedule: SampleSchedule, n: int):
        self.schedule = schedule
        self.n = n
        self.points: list[TimeSeriesPoint] = []
        self.t_c: float | None = None
        self.converged = False
        self._grid = schedule.grid
        self._i = 0
        self._last_t = 0.0
        self._last_nw = 0
        self._last_nd = 0
        self._bin_succ = 0
        self._bin_lis = 0
        self._bin_events = 0

    def record(self, t: float, n_w: int, n_d: int, outcome) -> None:
        if t < self._last_t:
            raise ValueError(f"events must arrive in nondecreasing t "
                             f"(got {t} after {self._last_t})")
        while self._i < self._grid.size and self._grid[self._i] < t:
            self._emit(converged=False)
        self._bin_succ += outcome.success_count
        self._bin_lis += outcome.listener_count
        self._bin_events += 1
        self._last_t = t
        self._last_nw = n_w
        self._last_nd = n_d

    def _emit(self, converged: bool) -> None:
        g = float(self._grid[self._i])
        if self._bin_events > 0:
            s = self._bin_succ / self._bin_lis if self._bin_lis > 0 else None
            self.points.append(TimeSeriesPoint(g, self._last_nw, self._last_nd, s))
        elif converged:
            self.points.append(TimeSeriesPoint(g, self.n, 1, 1.0))
        else:
            self.points.append(TimeSeriesPoint(g, self._last_nw, self._last_nd, None))
        self._bin_succ = 0
        self._bin_lis = 0
        self._bin_events = 0
        self._i += 1

    def finalize(self, converged: bool, n: int, t_c: float | None) -> None:
        while self._i < self._grid.size:
            self._emit(converged=converged)
        self.converged = converged
        self.t_c = t_c

    def series(self) -> RunSeries:
        pts = self.points
        return RunSeries(
            grid=self._grid.copy(),
            n_w=np.array([p.n_w for p in pts], dtype=np.int64),
            n_d=np.array([p.n_d for p in pts], dtype=np.int64),
            s=np.array([np.nan if p.s is None else p.s for p in pts]),
            t_c=self.t_c,
            converged=self.converged,
        )


@dataclass
class EnsembleSeries:
    """Pointwise mean and sample standard deviation over realizations."""

    grid: np.ndarray
    nw_mean: np.ndarray
    nw_std: np.ndarray
    nd_mean: np.ndarray
    nd_std: np.ndarray
    s_mean: np.ndarray
    s_std: np.ndarray
    run_count: int


def _mean_std(values: np.ndarray, ddof_possible: bool) -> tuple[np.ndarray, np.ndarray]:
    mean = values.mean(axis=0)
    if ddof_possible:
        std = values.std(axis=0, ddof=1)
    else:
        std = np.zeros_like(mean)
    return mean, std


def aggregate(runs: Sequence[RunSeries]) -> EnsembleSeries:
    """Pointwise statistics across runs sharing one grid.

    Sample std uses divisor run_count - 1; a single run reports std 0. S
    statistics skip NaN entries pointwise (bins without listener samples).
    """
    if len(runs) == 0:
        raise ValueError("cannot aggregate an empty run list")
    grid = runs[0].grid
    for r in runs[1:]:
        if not np.array_equal(r.grid, grid):
            raise ValueError("all runs must share the same time grid")
    many = len(runs) >= 2
    nw = np.stack([r.n_w for r in runs]).astype(float)
    nd = np.stack([r.n_d for r in runs]).astype(float)
    s = np.stack([r.s for r in runs])
    nw_mean, nw_std = _mean_std(nw, many)
    nd_mean, nd_std = _mean_std(nd, many)

    valid = ~np.isnan(s)
    counts = valid.sum(axis=0)
    s_filled = np.where(valid, s, 0.0)
    with np.errstate(invalid="ignore"):
        s_mean = np.where(counts > 0, s_filled.sum(axis=0) / np.maximum(counts, 1), np.nan)
        dev = np.where(valid, s - s_mean, 0.0)
        var = np.where(counts > 1, (dev * dev).sum(axis=0) / np.maximum(counts - 1, 1), 0.0)
    s_std = np.sqrt(var)
    return EnsembleSeries(grid=grid.copy(), nw_mean=nw_mean, nw_std=nw_std,
                          nd_mean=nd_mean, nd_std=nd_std, s_mean=s_mean,
                          s_std=s_std, run_count=len(runs))


@dataclass(frozen=True)
class ConvergenceStats:
    mean_tc: float
    std_tc: float
    run_count: int
    unconverged_count: int


def convergence_stats(t_c_list: Sequence[float], unconverged: int = 0) -> ConvergenceStats:
    """Mean and sample standard deviation of convergence times.

    Unconverged runs are excluded from the statistics and reported as a count.
    """
    if len(t_c_list) == 0:
        raise ValueError("t_c_list must be non-empty")
    arr = np.asarray(t_c_list, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size >= 2 else 0.0
    return ConvergenceStats(mean_tc=float(arr.mean()), std_tc=std,
                            run_count=int(arr.size), unconverged_count=int(unconverged))
