"""arccover: Monte Carlo toolkit for one-dimensional random covering processes."""

__version__ = "0.1.0"

from .tails import TailFunction, TailMoments, parse_tail, karamata_ratio, rv_limit_probe, moment_diagnostic, cf_estimate
from .torus import (
    TorusCoverState,
    NaiveCoverState,
    CoverResult,
    run_to_cover,
    snapshot_vacant,
    vacancy_probability_exact,
    pair_vacancy_exact,
)
from .circle import (
    CircleConfiguration,
    VacantIntervals,
    ProjectionSet,
    sample_truncated,
    vacant_set,
    is_covered,
    count_missing_lattice,
    pi_hat,
    project_W,
    project_X,
    shepp_series,
    dimension_estimate,
)
from .stats import (
    EmpiricalDistribution,
    KSResult,
    OffspringLaw,
    gumbel_cdf,
    exp_cdf,
    ks_distance,
    coupon_collector_sample,
    preexp_bounds,
    branching_run,
    kesten_stigum_check,
)
from .seeding import derive_seed
