"""Experiment orchestration: configs, deterministic seeding, ensembles, sweeps.

Every realization i of an ensemble draws from its own PCG64 stream seeded by
SHA-256 of "<master_seed>:<i>", a pure function of the pair, so results are
identical across invocations and worker counts; random topologies are redrawn
per realization (quenched-disorder averaging). Results are merged in
realization-index order regardless of scheduling.
"""

from __future__ import annotations

import hashlib
import math
import multiprocessing
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import engine
from .analysis import FitResult, fit_power_law
from .dynamics import BROADCAST, MODES
from .observables import (
    ConvergenceStats,
    EnsembleSeries,
    RunSeries,
    SampleSchedule,
    aggregate,
    convergence_stats,
)
from .topology import (
    FREE,
    PERIODIC,
    Graph,
    RggConfig,
    SwConfig,
    add_shortcuts,
    generate_complete,
    generate_connected_rgg,
    generate_lattice_2d,
    measured_avg_degree,
)

RGG = "rgg"
SW_RGG = "sw_rgg"
LATTICE2D = "lattice2d"
COMPLETE = "complete"
TOPOLOGIES = (RGG, SW_RGG, LATTICE2D, COMPLETE)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment parameters."""


def derive_seed(master_seed: int, index: int) -> int:
    """128-bit stream seed for realization `index`; distinct per index."""
    digest = hashlib.sha256(f"{master_seed}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest[:16], "little")


def realization_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, index))


@dataclass
class ExperimentConfig:
    """Flat experiment description; see parse_config for the file keys."""

    topology: str = RGG
    n: int = 1024
    avg_degree: float | None = None
    radius: float | None = None
    box_length: float | None = None
    density: float | None = None
    boundary: str = PERIODIC
    shortcut_density: float = 0.0
    lattice_periodic: bool = True
    mode: str = BROADCAST
    runs: int = 1
    max_time: float = 1000.0
    master_seed: int = 1
    t_min: float = 0.1
    points_per_decade: int = 20
    snapshot_times: tuple[float, ...] = ()
    connectivity_policy: str = "regenerate"
    workers: int = 1
    fit_windows: dict = field(default_factory=dict)
    sweep_axis: str | None = None
    sweep_values: tuple[float, ...] = ()
    sweep_fit_window: tuple[float, float] | None = None

    def validate(self) -> None:
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if self.max_time <= 0:
            raise ConfigError(f"max_time must be positive, got {self.max_time}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.t_min <= 0 or self.t_min >= self.max_time:
            raise ConfigError(f"need 0 < t_min < max_time, got {self.t_min}")
        if self.connectivity_policy not in ("regenerate", "giant_component"):
            raise ConfigError(f"unknown connectivity policy {self.connectivity_policy!r}")
        if self.boundary not in (PERIODIC, FREE):
            raise ConfigError(f"unknown boundary {self.boundary!r}")
        if self.shortcut_density < 0:
            raise ConfigError(f"shortcut density must be >= 0, got {self.shortcut_density}")
        if tuple(self.snapshot_times) != tuple(sorted(self.snapshot_times)):
            raise ConfigError("snapshot times must be sorted")
        if self.snapshot_times and self.topology not in (RGG, SW_RGG):
            raise ConfigError("snapshots require a spatial topology")
        if self.topology in (RGG, SW_RGG):
            if (self.avg_degree is None) == (self.radius is None):
                raise ConfigError("set exactly one of avg_degree / radius")
            if self.box_length is not None and self.density is not None:
                raise ConfigError("set at most one of box_length / density")
        if self.topology == LATTICE2D:
            side = math.isqrt(self.n)
            if side * side != self.n:
                raise ConfigError(f"lattice2d needs a square n, got {self.n}")
        if self.sweep_axis is not None and self.sweep_axis not in ("n", "p"):
            raise ConfigError(f"sweep axis must be 'n' or 'p', got {self.sweep_axis!r}")

    def resolved_box_length(self) -> float:
        if self.box_length is not None:
            return self.box_length
        density = 1.0 if self.density is None else self.density
        return math.sqrt(self.n / density)

    def target_degree(self) -> float:
        """The degree the topology aims for (exact for lattice/complete)."""
        if self.topology == LATTICE2D:
            return 4.0
        if self.topology == COMPLETE:
            return float(self.n - 1)
        if self.avg_degree is not None:
            return self.avg_degree
        rho = self.n / self.resolved_box_length() ** 2
        return rho * math.pi * self.radius**2

    def schedule(self) -> SampleSchedule:
        return SampleSchedule.logarithmic(self.t_min, self.max_time,
                                          self.points_per_decade)


def build_graph(config: ExperimentConfig, rng: np.random.Generator) -> tuple[Graph, int]:
    """Realize the configured topology; returns (graph, position draws used)."""
    if config.topology in (RGG, SW_RGG):
        rcfg = RggConfig(n=config.n, box_length=config.resolved_box_length(),
                         radius=config.radius, target_avg_degree=config.avg_degree,
                         boundary=config.boundary)
        g, attempts = generate_connected_rgg(rcfg, rng, policy=config.connectivity_policy)
        if config.topology == SW_RGG:
            g = add_shortcuts(g, SwConfig(config.shortcut_density), rng)
        return g, attempts
    if config.topology == LATTICE2D:
        return generate_lattice_2d(math.isqrt(config.n), config.lattice_periodic), 1
    if config.topology == COMPLETE:
        return generate_complete(config.n), 1
    raise ConfigError(f"unknown topology {config.topology!r}")


@dataclass
class RealizationResult:
    index: int
    series: RunSeries | None
    t_c: float | None
    converged: bool
    measured_k: float
    attempts: int
    snapshots: list = field(default_factory=list)


def run_realization(config: ExperimentConfig, index: int,
                    record_series: bool = True,
                    with_snapshots: bool = False,
                    seed: int | None = None) -> RealizationResult:
    """One realization: fresh graph (random topologies) plus one full run."""
    rng = (np.random.default_rng(seed) if seed is not None
           else realization_rng(config.master_seed, index))
    g, attempts = build_graph(config, rng)
    schedule = config.schedule() if record_series else None
    snaps = tuple(config.snapshot_times) if with_snapshots else ()
    result, series, snapshots = engine.run_fast(
        g, config.mode, rng, config.max_time, schedule=schedule,
        snapshot_times=snaps)
    return RealizationResult(index=index, series=series, t_c=result.t_c,
                             converged=result.converged,
                             measured_k=measured_avg_degree(g),
                             attempts=attempts, snapshots=snapshots)


@dataclass
class EnsembleResult:
    config: ExperimentConfig
    series: EnsembleSeries | None
    stats: ConvergenceStats | None
    t_c_values: list[float]
    unconverged: int
    measured_k_mean: float

    def summary_row(self) -> dict:
        """Fields of the one-line ensemble summary record."""
        return {
            "n": self.config.n,
            "k_target": self.config.target_degree(),
            "k_measured_mean": self.measured_k_mean,
            "p": self.config.shortcut_density if self.config.topology == SW_RGG else 0.0,
            "mode": self.config.mode,
            "runs": self.config.runs,
            "unconverged": self.unconverged,
            "mean_tc": self.stats.mean_tc if self.stats else float("nan"),
            "std_tc": self.stats.std_tc if self.stats else float("nan"),
        }


def _realization_task(args) -> RealizationResult:
    config, index, record_series, seed = args
    return run_realization(config, index, record_series=record_series, seed=seed)


def run_ensemble(config: ExperimentConfig, record_series: bool = True,
                 seeds: Sequence[int] | None = None) -> EnsembleResult:
    """Independent realizations with deterministically derived seeds.

    `seeds` overrides the per-realization seed list (testing hook); normally
    realization i is seeded from (master_seed, i). Worker-count independent.
    """
    config.validate()
    if seeds is not None and len(seeds) != config.runs:
        raise ConfigError(f"seed override must list {config.runs} seeds")
    tasks = [(config, i, record_series, seeds[i] if seeds is not None else None)
             for i in range(config.runs)]
    if config.workers > 1 and config.runs > 1:
        ctx = multiprocessing.get_context("fork")
        chunk = max(1, config.runs // (config.workers * 8))
        with ctx.Pool(config.workers) as pool:
            results = pool.map(_realization_task, tasks, chunksize=chunk)
    else:
        results = [_realization_task(t) for t in tasks]

    results.sort(key=lambda r: r.index)
    t_c_values = [r.t_c for r in results if r.converged]
    unconverged = sum(1 for r in results if not r.converged)
    stats = convergence_stats(t_c_values, unconverged) if t_c_values else None
    series = aggregate([r.series for r in results]) if record_series else None
    measured_k_mean = float(np.mean([r.measured_k for r in results]))
    return EnsembleResult(config=config, series=series, stats=stats,
                          t_c_values=t_c_values, unconverged=unconverged,
                          measured_k_mean=measured_k_mean)


@dataclass
class SweepResult:
    axis: str
    values: tuple[float, ...]
    ensembles: list[EnsembleResult]
    mean_tc_fit: FitResult | None
    std_tc_fit: FitResult | None


def config_for_sweep_value(config: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    if axis == "n":
        return replace(config, n=int(value))
    if axis == "p":
        return replace(config, topology=SW_RGG, shortcut_density=float(value))
    raise ConfigError(f"sweep axis must be 'n' or 'p', got {axis!r}")


def run_sweep(config: ExperimentConfig, axis: str | None = None,
              values: Sequence[float] | None = None,
              record_series: bool = True) -> SweepResult:
    """One ensemble per sweep value plus power-law fits of t_c statistics.

    Fits mean t_c (and its std, for n-sweeps) against the sweep variable over
    config.sweep_fit_window when given, otherwise over all values.
    """
    axis = axis if axis is not None else config.sweep_axis
    values = tuple(values if values is not None else config.sweep_values)
    if axis not in ("n", "p"):
        raise ConfigError(f"sweep axis must be 'n' or 'p', got {axis!r}")
    if len(values) < 3:
        raise ConfigError(f"sweeps need at least 3 values, got {len(values)}")
    ensembles = [run_ensemble(config_for_sweep_value(config, axis, v),
                              record_series=record_series)
                 for v in values]
    window = config.sweep_fit_window
    mean_pts = [(v, e.stats.mean_tc) for v, e in zip(values, ensembles) if e.stats]
    std_pts = [(v, e.stats.std_tc) for v, e in zip(values, ensembles) if e.stats]
    mean_fit = fit_power_law(mean_pts, window) if len(mean_pts) >= 2 else None
    std_fit = (fit_power_law(std_pts, window)
               if axis == "n" and len(std_pts) >= 2 and all(y > 0 for _, y in std_pts)
               else None)
    return SweepResult(axis=axis, values=values, ensembles=ensembles,
                       mean_tc_fit=mean_fit, std_tc_fit=std_fit)


# Desk-scale presets. Size ladders and run counts are trimmed to keep each
# preset in the minutes range on a laptop; tolerance targets in the test
# suite assume these reduced ensembles.
PRESETS: dict[str, dict[str, str]] = {
    # broadcast coarsening observables at moderate degree
    "observables-k12": {
        "topology.kind": "rgg", "topology.n": "1024", "topology.avg_degree": "12",
        "topology.density": "1", "dynamics.mode": "broadcast",
        "run.runs": "200", "run.max_time": "4000", "run.master_seed": "20240501",
    },
    # broadcast coarsening at high degree; fits target the scaling window
    "coarsening-k50": {
        "topology.kind": "rgg", "topology.n": "1024", "topology.avg_degree": "50",
        "topology.density": "1", "dynamics.mode": "broadcast",
        "run.runs": "200", "run.max_time": "2000", "run.master_seed": "20240502",
        "fit.nw": "3:30", "fit.nd": "3:30", "fit.s": "3:30",
    },
    # consensus-time scaling on the pure geometric graph, high degree
    "consensus-scaling": {
        "topology.kind": "rgg", "topology.avg_degree": "50", "topology.density": "1",
        "dynamics.mode": "broadcast", "run.runs": "200", "run.max_time": "4000",
        "run.master_seed": "20240503",
        "sweep.axis": "n", "sweep.values": "256,512,1024,2048",
    },
    # shortcut-accelerated consensus vs system size at fixed link density
    "sw-n-sweep": {
        "topology.kind": "sw_rgg", "topology.avg_degree": "12", "topology.density": "1",
        "topology.p": "0.05", "dynamics.mode": "broadcast",
        "run.runs": "100", "run.max_time": "2000", "run.master_seed": "20240504",
        "sweep.axis": "n", "sweep.values": "512,1024,2048,4096",
    },
    # consensus vs shortcut density at fixed size; fit the large-p half
    "sw-p-sweep": {
        "topology.kind": "sw_rgg", "topology.n": "2048", "topology.avg_degree": "12",
        "topology.density": "1", "dynamics.mode": "broadcast",
        "run.runs": "100", "run.max_time": "4000", "run.master_seed": "20240505",
        "sweep.axis": "p", "sweep.values": "0.005,0.01,0.02,0.05,0.1",
        "sweep.fit_window": "0.02:0.1",
    },
    # no-shortcut control for the sweep above
    "rgg-n-sweep-k12": {
        "topology.kind": "rgg", "topology.avg_degree": "12", "topology.density": "1",
        "dynamics.mode": "broadcast", "run.runs": "100", "run.max_time": "8000",
        "run.master_seed": "20240506",
        "sweep.axis": "n", "sweep.values": "512,1024,2048,4096",
    },
    # pairwise baselines: homogeneous mixing and 2-d grid
    "baseline-fc": {
        "topology.kind": "complete", "dynamics.mode": "pairwise",
        "run.runs": "200", "run.max_time": "2000", "run.master_seed": "20240507",
        "sweep.axis": "n", "sweep.values": "128,256,512,1024,2048",
    },
    "baseline-lattice": {
        "topology.kind": "lattice2d", "dynamics.mode": "pairwise",
        "run.runs": "200", "run.max_time": "8000", "run.master_seed": "20240508",
        "sweep.axis": "n", "sweep.values": "256,625,1600,4096",
    },
    # single spatial run with word-map snapshots along the way
    "snapshots": {
        "topology.kind": "rgg", "topology.n": "1000", "topology.avg_degree": "12",
        "topology.density": "1", "dynamics.mode": "broadcast",
        "run.runs": "1", "run.max_time": "4000", "run.master_seed": "20240509",
        "snapshot.times": "1,43,169,291",
    },
}


_WINDOW_KEYS = {"fit.nw": "nw", "fit.nd": "nd", "fit.s": "s"}


def _parse_bool(raw: str) -> bool:
    if raw.lower() in ("true", "1", "yes"):
        return True
    if raw.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _parse_window(raw: str) -> tuple[float, float]:
    try:
        lo, hi = raw.split(":")
        return float(lo), float(hi)
    except ValueError as exc:
        raise ConfigError(f"expected a lo:hi window, got {raw!r}") from exc


def _parse_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.split(",") if tok.strip())


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    """Build a config from flat section-prefixed keys (topology.n=1024)."""
    simple = {
        "topology.kind": ("topology", str),
        "topology.n": ("n", int),
        "topology.avg_degree": ("avg_degree", float),
        "topology.radius": ("radius", float),
        "topology.box_length": ("box_length", float),
        "topology.density": ("density", float),
        "topology.boundary": ("boundary", str),
        "topology.p": ("shortcut_density", float),
        "topology.lattice_periodic": ("lattice_periodic", _parse_bool),
        "dynamics.mode": ("mode", str),
        "run.runs": ("runs", int),
        "run.max_time": ("max_time", float),
        "run.master_seed": ("master_seed", int),
        "run.workers": ("workers", int),
        "run.connectivity_policy": ("connectivity_policy", str),
        "schedule.t_min": ("t_min", float),
        "schedule.points_per_decade": ("points_per_decade", int),
        "snapshot.times": ("snapshot_times", _parse_floats),
        "sweep.axis": ("sweep_axis", str),
        "sweep.values": ("sweep_values", _parse_floats),
        "sweep.fit_window": ("sweep_fit_window", _parse_window),
    }
    kwargs: dict = {}
    windows: dict = {}
    for key, raw in mapping.items():
        if key in _WINDOW_KEYS:
            windows[_WINDOW_KEYS[key]] = _parse_window(raw)
            continue
        if key not in simple:
            raise ConfigError(f"unknown config key {key!r}")
        name, parser = simple[key]
        try:
            kwargs[name] = parser(raw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if windows:
        kwargs["fit_windows"] = windows
    try:
        config = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def parse_config_file(path) -> dict[str, str]:
    """key=value lines; blank lines and # comments ignored."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def layer_config(preset: str | None = None, file_mapping: dict[str, str] | None = None,
                 overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Preset < config file < explicit overrides, then validate."""
    merged: dict[str, str] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; "
                              f"available: {', '.join(sorted(PRESETS))}")
        merged.update(PRESETS[preset])
    if file_mapping:
        merged.update(file_mapping)
    if overrides:
        merged.update(overrides)
    return config_from_mapping(merged)
