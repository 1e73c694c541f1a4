"""Simulator and rate-region calculator for primary/secondary relaying over
broadcast erasure channels with public feedback."""

from .alg1 import Algorithm1Policy, algorithm1_policy
from .alg2 import Algorithm2Policy, MixParams, algorithm2_policy
from .erasure import (
    CaseLabel,
    ErasureModel,
    ModelError,
    PreconditionError,
    classify_case,
    independent_model,
    marginal_erasure_prob,
    model_from_dict,
    model_to_dict,
    sample_erasure,
)
from .experiments import (
    DeviationRecord,
    DeviationStudy,
    GridSpec,
    convergence_sweep,
    deviation_study,
    tau_accounting,
    write_deviation_csv,
)
from .regions import (
    AuxVars,
    LinearRegion,
    ParametricPoint,
    RatePair,
    alg2_parametric_point,
    alg2_region_max_r2,
    alg2_t_hat,
    inner_bound_max_r2,
    outer_bound_max_r2,
    outer_bound_max_r2_lp,
    outer_bound_region,
    r1_upper_bound,
    region_membership,
    t_hat,
    t_hat_parts,
)
from .simcore import (
    CodedPacket,
    ConfigError,
    DecodeError,
    Packet,
    QueueBank,
    SimConfig,
    SimResult,
    decode_at_receiver,
    run_loop,
    xor_combine,
)

__version__ = "0.1.0"
