"""Age of information for content read from Dynamo-style quorum replicated storage."""

from .analytics import (
    AgeBreakdown,
    OptimalQuorum,
    approx_average_age,
    exact_average_age,
    interval_count_moments,
    miss_probability,
    optimal_omega,
    optimal_write_quorum,
    successful_write_delay_mean,
)
from .experiments import SimOptions, SweepRow, emit_table, parse_table, sweep_grid, sweep_write_quorum
from .model import (
    HarmonicCache,
    QuorumConfig,
    Regime,
    ShiftedExponential,
    harmonic,
    harmonic2,
    order_stat_mean,
    order_stat_var,
    sample_delays,
)
from .simulator import AgeStatistics, CycleRecord, cycle_area, replicate, run_simulation

__version__ = "0.1.0"
