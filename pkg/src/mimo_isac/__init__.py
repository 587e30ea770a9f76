"""Performance analysis of MIMO integrated sensing and communication downlinks."""

from .allocation import (
    CommCentric,
    ConvergenceError,
    DegenerateInputError,
    Fdsac,
    Pareto,
    ParetoPoint,
    PowerAllocation,
    SensingCentric,
    comm_waterfill,
    fdsac_allocate,
    pareto_allocate,
    sensing_waterfill,
    waterfill,
)
from .model import (
    ChannelDraw,
    RankDeficiencyError,
    SensingCorrelation,
    SystemConfig,
    TargetScene,
    build_correlation_from_eigenvalues,
    build_correlation_from_scene,
    db_to_linear,
    sample_channels,
    sample_rho,
    sample_target_response,
    zero_forcing_gains,
)
from .montecarlo import (
    McEstimate,
    SlopeFit,
    estimate_avg_sr,
    estimate_ecr,
    estimate_op,
    fit_diversity_order,
    fit_high_snr_slope,
    sweep,
)
from .rates import (
    RateTuple,
    asymptote_ecr,
    asymptote_sr,
    comm_sum_rate,
    ecr_closed_form,
    fdsac_rates,
    sensing_rate,
)
from .region import (
    ContainmentReport,
    RegionBoundary,
    SandwichReport,
    check_containment,
    fdsac_boundary,
    isac_boundary,
    verify_sandwich,
)
from .specfun import DomainError, digamma, exp_integral_E1, exp_integral_Ei, log_gamma

__version__ = "0.1.0"
