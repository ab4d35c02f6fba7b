"""Multilevel Monte Carlo estimation with CLT diagnostics on families with exact moments."""

from .diagnostics import (
    diagnose,
    failure_witness,
    lim_cond_term,
    lindeberg_sum,
    ui_probe,
    variance_ratio_sweep,
)
from .engine import MomentAccumulator, merge_accumulators, run_experiment, run_replication
from .families import (
    ConstantFamily,
    GaussianFamily,
    HeavyFailureFamily,
    LevelFamily,
    PartitionFamily,
    gaussian_lindeberg_tail,
)
from .normality import ks_statistic, normality_report, qq_points, sample_moments, std_normal_cdf
from .rates import (
    EstimatorPlan,
    LevelSchedule,
    RateTriplet,
    Regime,
    RegimeKind,
    TailDescriptor,
    classify_regime,
    level_sums,
    make_plan,
    num_levels,
    plan_for_schedule,
    sample_allocation,
    variance_ratio,
)

__version__ = "0.1.0"
