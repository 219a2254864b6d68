"""Simulation laboratory for the Hammersley interacting particle system.

Space-time Poisson epochs drive a zero-range-style dynamics on the line; the
package provides the graphical construction on certified windows, the
variational flux with exit points, two-class couplings, the queue-based
invariant two-class measure, and a replicated Monte Carlo harness with exact
analytic targets.
"""

from .errors import (
    CertificationFailure,
    HamlabError,
    InvalidParameterError,
    UncertifiedRegionError,
    UncertifiedTrajectoryError,
    UndefinedPValueError,
)
from .rng import RngStream
from .points import (
    DualPointSet,
    LinePointSet,
    PlanarPointSet,
    extend_line,
    extend_planar,
    sample_planar_unit_poisson,
    sample_poisson_line,
    thin_split,
)
from .profiles import (
    CLASS_FIRST,
    CLASS_SECOND,
    ORIGIN_ATOM_ID,
    ParticleConfig,
    add_origin_atom,
    from_line_points,
    from_positions,
    merge_two_class,
    profile_count,
    shock_profile,
    stationary_profile,
    thinned_pair,
)
from .lpp import FluxResult, flux_naive_oracle, flux_variational, lis_length, lis_length_quadratic
from .dynamics import (
    ConfigurationState,
    EventLog,
    PriorityResult,
    TrajectoryRecord,
    chi_bar_max,
    chi_min,
    coupled_discrepancy,
    evolve,
    flux_from_dynamics,
    priority_dynamics,
    replay_positions,
    tagged_positions,
    tagged_trajectory,
    west_process,
)
from .queueing import (
    QueueSample,
    ShockCouplingResult,
    TwoLineResult,
    condition_second_class_at_origin,
    dual_points,
    mm1_path,
    shock_coupling_experiment,
    stationary_two_class,
    two_line_process,
)
from .stats import (
    FitResult,
    SummaryStats,
    TheoremConstants,
    chi2_statistic,
    fit_loglog,
    ks_2samp,
    ks_statistic,
    normal_cdf,
    skellam_tail_oracle,
)
from .experiments import EXPERIMENTS, run_named_experiment, run_replicas

__all__ = [name for name in dir() if not name.startswith("_")]
