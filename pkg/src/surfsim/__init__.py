"""surfsim: simulator and analytics for k-choice subtractive random forests.

Positive integers link back in time through k independent random delays;
each step adopts the best-valued of its k candidate histories.  This package
generates such trajectories, computes their reach/chain/leaf structure,
evaluates the associated renewal sequences, and runs the Monte Carlo regime
experiments through a CLI.
"""

__version__ = "0.1.0"

from .analytics import (
    ChainStats,
    LongestEdgeLeafStats,
    ReachStats,
    brute_force_cv,
    chain,
    coalescence_estimate,
    export_subgraph,
    extreme_leaf_curves,
    j_count,
    longest_edge_leaf_stats,
    reach_stats,
)
from .dists import (
    DelayDistribution,
    Geometric,
    InversePower,
    MinOfK,
    Regime,
    RegimeLabel,
    TableDist,
    ZetaPareto,
    classify_regime,
    make_distribution,
)
from .experiments import (
    ExperimentConfig,
    MatrixCell,
    RegimeReport,
    RenewalCheckReport,
    SeriesResult,
    expected_longest_edge_hits,
    figure_mean_runs,
    figure_single_runs,
    monte_carlo_renewal_check,
    run_k_choice_sweep,
    run_mean_v,
    run_regime_matrix,
    run_single_trajectory,
    run_streams,
)
from .renewal import (
    RenewalSequence,
    SquaredSumReport,
    decay_exponent_fit,
    renewal_limit,
    renewal_sequence,
    squared_sum_diagnostic,
)
from .simulate import (
    LeafConfig,
    LeafPool,
    ThinnedSeries,
    Trajectory,
    simulate,
    stream_v,
)

__all__ = [
    "ChainStats",
    "DelayDistribution",
    "ExperimentConfig",
    "Geometric",
    "InversePower",
    "LeafConfig",
    "LeafPool",
    "LongestEdgeLeafStats",
    "MatrixCell",
    "MinOfK",
    "ReachStats",
    "Regime",
    "RegimeLabel",
    "RegimeReport",
    "RenewalCheckReport",
    "RenewalSequence",
    "SeriesResult",
    "SquaredSumReport",
    "TableDist",
    "ThinnedSeries",
    "Trajectory",
    "ZetaPareto",
    "brute_force_cv",
    "chain",
    "classify_regime",
    "coalescence_estimate",
    "decay_exponent_fit",
    "expected_longest_edge_hits",
    "export_subgraph",
    "extreme_leaf_curves",
    "figure_mean_runs",
    "figure_single_runs",
    "j_count",
    "longest_edge_leaf_stats",
    "make_distribution",
    "monte_carlo_renewal_check",
    "reach_stats",
    "renewal_limit",
    "renewal_sequence",
    "run_k_choice_sweep",
    "run_mean_v",
    "run_regime_matrix",
    "run_single_trajectory",
    "run_streams",
    "simulate",
    "squared_sum_diagnostic",
    "stream_v",
]
