"""Monte Carlo toolkit for naming games on spatial random networks.

Agents on a fixed communication graph start with empty vocabularies, invent
and exchange words (broadcast to all neighbors, or classic speaker-listener
pairs) and converge to a shared single word. The package generates the
graphs (random geometric, shortcut-augmented, lattice, complete), runs the
dynamics with memory-bounded observation, and fits the coarsening power laws
and consensus-time scaling.
"""

from .analysis import (
    FitError,
    FitResult,
    ScalingPrediction,
    fit_power_law,
    predict_crossover,
    predict_scaling,
    sw_onset_check,
)
from .dynamics import (
    BROADCAST,
    PAIRWISE,
    RunResult,
    SimState,
    StepOutcome,
    invent_word,
    is_consensus,
    run,
    step,
)
from .engine import Snapshot, run_fast
from .experiments import (
    ConfigError,
    EnsembleResult,
    ExperimentConfig,
    PRESETS,
    build_graph,
    derive_seed,
    realization_rng,
    run_ensemble,
    run_realization,
    run_sweep,
)
from .observables import (
    ConvergenceStats,
    EnsembleSeries,
    Recorder,
    RunSeries,
    SampleSchedule,
    TimeSeriesPoint,
    aggregate,
    convergence_stats,
)
from .topology import (
    FREE,
    PERIODIC,
    Graph,
    RggConfig,
    SwConfig,
    TopologyError,
    add_shortcuts,
    connected_components,
    generate_complete,
    generate_connected_rgg,
    generate_lattice_2d,
    generate_rgg,
    measured_avg_degree,
    radius_for_degree,
    read_edge_list,
    write_edge_list,
)

__version__ = "0.1.0"
