"""Membership-inference advantage bounds for compositions of sampled Gaussian mechanisms."""

__version__ = "0.1.0"

from mi_accountant.attack import AttackOutcome, bayes_guess, run_attack, sample_transcript
from mi_accountant.core import (
    BoundReport,
    Estimate,
    MechanismSchedule,
    NeighboringMode,
    ScheduleError,
    ScheduleStep,
    normalize_dpsgd,
    validate_schedule,
)
from mi_accountant.gaussian_tv import (
    GaussianMixture,
    TvaQuery,
    check_subsampling_lemma,
    tv_gaussian_exact,
    tva_gaussian_closed,
    tva_quadrature,
)
from mi_accountant.mixture_tv import (
    CanonicalPair,
    McConfig,
    log_density_ratio,
    mi_advantage_mc,
    mi_advantage_mc_reverse,
)
from mi_accountant.rdp import (
    EpsDelta,
    RdpCurve,
    baseline_advantage_from_eps,
    eps_from_rdp,
    kl_sampled_gaussian,
    pinsker_advantage,
    precision_bounds,
    rdp_curve,
    rdp_gaussian,
    rdp_sampled_gaussian,
)
