"""Random asynchronous iterations of distributed coordination algorithms.

A linear averaging network x(k+1) = A_sigma_k x(k) updates only the agents
in the random set sigma_k at each tick.  This package provides the matrix
and graph analysis for such systems (ergodic coefficients, scrambling and
SIA classification, rootedness), the schedulers that generate the update
sets, checkers for the almost-sure-consensus conditions, the labelled-cycle
backward walk with its geometric absorption bound, and a seeded Monte Carlo
harness with canned qualitative replays.
"""
from ._kernels import backend_name
from .datasets import (
    BUNDLED_MATRICES,
    BUNDLED_SCHEDULERS,
    bundled_matrix,
    bundled_scheduler,
)
from .engine import (
    TrajectoryState,
    initial_state,
    make_async_matrix,
    normalize_update_set,
    run_script,
    step,
)
from .errors import DimensionError, ValidationError
from .graphs import (
    DirectedGraph,
    LabelledCycle,
    RootReport,
    analysis_report,
    build_graph,
    build_labelled_cycle,
    is_sia,
    roots,
    scc_decomposition,
)
from .matrices import (
    ColumnStochasticMatrix,
    StochasticMatrix,
    ergodic_coefficient,
    is_scrambling,
    matrix_power,
    max_discrepancy,
    multiply,
    projection_diagnostics,
    same_type,
)
from .montecarlo import (
    ExperimentConfig,
    ExperimentResult,
    ReplayReport,
    REPLAY_CASES,
    ScramblingHitRate,
    replay,
    run_experiment,
    scrambling_hit_rate,
    wilson_interval,
)
from .rng import DEFAULT_SEED, stream
from .schedulers import (
    ConditionCheck,
    ConditionReport,
    GlobalClockScheduler,
    IndependentClocksScheduler,
    MarkovScheduler,
    Scheduler,
    ScriptScheduler,
    StrongAperiodicityCheck,
    SupportSequenceScheduler,
    check_conditions,
    check_strongly_aperiodic,
    scheduler_from_json,
)
from .walk import (
    DistanceChain,
    MatchCurve,
    RateCertificate,
    WalkTrajectory,
    cycle_distance,
    default_move_probabilities,
    lower_bound_matrix,
    match_probability_curve,
    product_convergence_rate,
    simulate_backward_walk,
    uniform_completion,
)

__version__ = "0.1.0"

__all__ = [
    "BUNDLED_MATRICES",
    "BUNDLED_SCHEDULERS",
    "ColumnStochasticMatrix",
    "ConditionCheck",
    "ConditionReport",
    "DEFAULT_SEED",
    "DimensionError",
    "DirectedGraph",
    "DistanceChain",
    "ExperimentConfig",
    "ExperimentResult",
    "GlobalClockScheduler",
    "IndependentClocksScheduler",
    "LabelledCycle",
    "MarkovScheduler",
    "MatchCurve",
    "RateCertificate",
    "REPLAY_CASES",
    "ReplayReport",
    "RootReport",
    "Scheduler",
    "ScramblingHitRate",
    "ScriptScheduler",
    "StochasticMatrix",
    "StrongAperiodicityCheck",
    "SupportSequenceScheduler",
    "TrajectoryState",
    "ValidationError",
    "WalkTrajectory",
    "analysis_report",
    "backend_name",
    "build_graph",
    "build_labelled_cycle",
    "bundled_matrix",
    "bundled_scheduler",
    "check_conditions",
    "check_strongly_aperiodic",
    "cycle_distance",
    "default_move_probabilities",
    "ergodic_coefficient",
    "initial_state",
    "is_scrambling",
    "is_sia",
    "lower_bound_matrix",
    "make_async_matrix",
    "match_probability_curve",
    "matrix_power",
    "max_discrepancy",
    "multiply",
    "normalize_update_set",
    "product_convergence_rate",
    "projection_diagnostics",
    "replay",
    "roots",
    "run_experiment",
    "run_script",
    "same_type",
    "scc_decomposition",
    "scheduler_from_json",
    "scrambling_hit_rate",
    "simulate_backward_walk",
    "step",
    "stream",
    "uniform_completion",
    "wilson_interval",
]
