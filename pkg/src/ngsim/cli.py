"""Command-line front end.

Subcommands: gen-graph, run, ensemble, sweep. Parameters come from a preset
(--preset), a key=value config file (--config) and repeatable --set overrides,
in that precedence order. Output location is --out only; nothing is read from
environment variables.

Exit codes: 0 success, 2 config error, 3 topology error, 4 run did not
converge within max_time, 5 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, experiments, topology
from .engine import Snapshot
from .experiments import ConfigError, ExperimentConfig
from .observables import EnsembleSeries, aggregate
from .topology import Graph, TopologyError, connected_components, write_edge_list

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOPOLOGY = 3
EXIT_UNCONVERGED = 4
EXIT_IO = 5

SUMMARY_FIELDS = ("n", "k_target", "k_measured_mean", "p", "mode", "runs",
                  "unconverged", "mean_tc", "std_tc")


def _fmt(value) -> str:
    """Shortest round-trip decimal for floats, plain text otherwise."""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_ensemble_csv(path: Path, series: EnsembleSeries) -> None:
    lines = ["t,nw_mean,nw_std,nd_mean,nd_std,s_mean,s_std"]
    for i in range(series.grid.size):
        lines.append(",".join(_fmt(float(v)) for v in (
            series.grid[i], series.nw_mean[i], series.nw_std[i],
            series.nd_mean[i], series.nd_std[i],
            series.s_mean[i], series.s_std[i])))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def write_summary_csv(path: Path, rows: list[dict]) -> None:
    lines = [",".join(SUMMARY_FIELDS)]
    for row in rows:
        lines.append(",".join(_fmt(row[k]) for k in SUMMARY_FIELDS))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def write_fits_csv(path: Path, fits: list[tuple[str, analysis.FitResult]]) -> None:
    lines = ["observable,exponent,amplitude,window_lo,window_hi,r_squared,points"]
    for name, fit in fits:
        lines.append(",".join([
            name, _fmt(fit.exponent), _fmt(fit.amplitude),
            _fmt(fit.window[0]), _fmt(fit.window[1]),
            _fmt(fit.r_squared), str(fit.point_count)]))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def write_snapshot_csv(path: Path, snap: Snapshot, g: Graph) -> None:
    lines = [f"# t={_fmt(snap.t_requested)} n={g.n} L={_fmt(float(g.box_length))}"]
    lines.append("id,x,y,vocab_size,word")
    for i in range(g.n):
        x, y = g.positions[i]
        lines.append(f"{i},{float(x)!r},{float(y)!r},"
                     f"{int(snap.vocab_sizes[i])},{int(snap.words[i])}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def scaling_observable(series: EnsembleSeries, n: int, which: str) -> list[tuple[float, float]]:
    """(t, y) pairs for the decaying observables fitted in log-log space."""
    t = series.grid
    if which == "nw":
        y = series.nw_mean / n - 1.0
    elif which == "nd":
        y = series.nd_mean / n
    elif which == "s":
        y = 1.0 - series.s_mean
    else:
        raise ValueError(f"unknown observable {which!r}")
    return list(zip(t.tolist(), y.tolist()))


def _load_config(args) -> ExperimentConfig:
    file_mapping = (experiments.parse_config_file(args.config)
                    if args.config else None)
    overrides: dict[str, str] = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.workers is not None:
        overrides["run.workers"] = str(args.workers)
    return experiments.layer_config(args.preset, file_mapping, overrides)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_graph(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    rng = experiments.realization_rng(config.master_seed, 0)
    g, _ = experiments.build_graph(config, rng)
    write_edge_list(g, out / "graph.edges")
    comps = len(connected_components(g))
    print(f"n={g.n} K={g.edge_count} "
          f"k_measured={_fmt(topology.measured_avg_degree(g))} components={comps}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    rng = experiments.realization_rng(config.master_seed, 0)
    g, _ = experiments.build_graph(config, rng)
    from .engine import run_fast
    result, series, snapshots = run_fast(
        g, config.mode, rng, config.max_time, schedule=config.schedule(),
        snapshot_times=tuple(config.snapshot_times))
    write_ensemble_csv(out / "series.csv", aggregate([series]))
    for snap in snapshots:
        write_snapshot_csv(out / f"snapshot_t{snap.t_requested:g}.csv", snap, g)
    if result.converged:
        print(f"converged=true t_c={_fmt(result.t_c)}")
        return EXIT_OK
    print(f"converged=false max_time={_fmt(config.max_time)}")
    return EXIT_UNCONVERGED


def _ensemble_outputs(config: ExperimentConfig, out: Path) -> "experiments.EnsembleResult":
    result = experiments.run_ensemble(config)
    write_ensemble_csv(out / "ensemble.csv", result.series)
    write_summary_csv(out / "summary.csv", [result.summary_row()])
    fits = []
    for which, window in sorted(config.fit_windows.items()):
        pts = scaling_observable(result.series, config.n, which)
        try:
            fits.append((which, analysis.fit_power_law(pts, window)))
        except analysis.FitError as exc:
            print(f"fit {which}: skipped ({exc})", file=sys.stderr)
    if fits:
        write_fits_csv(out / "fits.csv", fits)
        for name, fit in fits:
            print(f"fit {name}: exponent={_fmt(fit.exponent)} "
                  f"amplitude={_fmt(fit.amplitude)} r2={_fmt(fit.r_squared)}")
    return result


def cmd_ensemble(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    result = _ensemble_outputs(config, out)
    row = result.summary_row()
    print(" ".join(f"{k}={_fmt(row[k])}" for k in SUMMARY_FIELDS))
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    axis = config.sweep_axis
    values = config.sweep_values
    if axis is None or len(values) < 3:
        raise ConfigError("sweep needs sweep.axis and at least 3 sweep.values")
    rows = []
    ensembles = []
    for value in values:
        sub = experiments.config_for_sweep_value(config, axis, value)
        label = f"{axis}_{value:g}"
        result = _ensemble_outputs(sub, _ensure_dir(out / label))
        ensembles.append(result)
        row = result.summary_row()
        rows.append(row)
        print(" ".join(f"{k}={_fmt(row[k])}" for k in SUMMARY_FIELDS))
    write_summary_csv(out / "sweep.csv", rows)

    window = config.sweep_fit_window
    fits: list[tuple[str, analysis.FitResult]] = []
    mean_pts = [(v, e.stats.mean_tc) for v, e in zip(values, ensembles) if e.stats]
    if len(mean_pts) >= 2:
        fits.append(("mean_tc", analysis.fit_power_law(mean_pts, window)))
    if axis == "n":
        std_pts = [(v, e.stats.std_tc) for v, e in zip(values, ensembles)
                   if e.stats and e.stats.std_tc > 0]
        if len(std_pts) >= 2:
            fits.append(("std_tc", analysis.fit_power_law(std_pts, window)))
    if fits:
        write_fits_csv(out / "sweep_fit.csv", fits)
        for name, fit in fits:
            print(f"fit {name} vs {axis}: exponent={_fmt(fit.exponent)} "
                  f"r2={_fmt(fit.r_squared)}")
    return EXIT_OK


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ngsim",
        description="Naming-game simulations on spatial random networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_text in (
            ("gen-graph", cmd_gen_graph, "generate a graph and write its edge list"),
            ("run", cmd_run, "single run with time series and optional snapshots"),
            ("ensemble", cmd_ensemble, "ensemble of runs with averaged series"),
            ("sweep", cmd_sweep, "ensembles along an n or p sweep, with fits")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--preset", help="named preset configuration")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a single config key (repeatable)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel worker processes for ensembles")
        p.set_defaults(handler=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TopologyError as exc:
        print(f"topology error: {exc}", file=sys.stderr)
        return EXIT_TOPOLOGY
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
