"""Two-period difference-in-differences with a misclassified binary treatment."""

__version__ = "0.1.0"

from .core import (
    AssumptionViolation,
    DegenerateError,
    InvalidInputError,
    JointTreatmentDist,
    LatentPanel,
    LatentSample,
    MisdidError,
    ObservedPanel,
    ObservedUnit,
    conditional_rates,
    joint_dist_from_latent,
    observe,
)
from .estimators import DidEstimate, bootstrap_se, estimate_did, estimate_did_oracle
from .identification import (
    AttBounds,
    att_bounds,
    attenuation_factor,
    classify_bias_region,
    corollary1_factor,
    decompose,
    fixed_point_check,
    monotonicity_equivalence,
    parallel_trends_gap,
    prop2_relation,
    roy_lower_bound,
)
from .montecarlo import McConfig, McResult, MisclassDesign, draw_latent_panel, run_experiment

__all__ = [
    "AssumptionViolation", "DegenerateError", "InvalidInputError", "JointTreatmentDist", "LatentPanel",
    "LatentSample", "MisdidError", "ObservedPanel", "ObservedUnit", "conditional_rates",
    "joint_dist_from_latent", "observe", "DidEstimate", "bootstrap_se", "estimate_did",
    "estimate_did_oracle", "AttBounds", "att_bounds", "attenuation_factor", "classify_bias_region",
    "corollary1_factor", "decompose", "fixed_point_check", "monotonicity_equivalence",
    "parallel_trends_gap", "prop2_relation", "roy_lower_bound", "McConfig", "McResult",
    "MisclassDesign", "draw_latent_panel", "run_experiment",
]
