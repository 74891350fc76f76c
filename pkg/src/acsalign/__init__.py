"""Numerical toolkit for phase-based interference alignment on constant
complex channels: beamformer construction, feasibility verification, rate
evaluation, and the exhaustive allocation bound."""

from .bound import (
    AllocationCheck,
    AllocationProfile,
    BoundResult,
    SearchSpaceError,
    check_allocation,
    iter_feasible_profiles,
    max_dof,
)
from .channel import (
    ComplexChannelMatrix,
    ExtendedRotation,
    RealLiftedVector,
    construct_special_channel,
    dump_channel,
    extend_rotation,
    lift,
    load_channel,
    mod_distance,
    rotation_matrix,
    sample_channel,
    special_channel_kinds,
    unlift,
)
from .rates import (
    DEFAULT_SNR_GRID_DB,
    DofEstimate,
    RankDeficientReceiverError,
    RateReport,
    StreamRate,
    baseline_best_sum_rate,
    baseline_circsym,
    baseline_rate_profile,
    estimate_baseline_dof,
    estimate_dof,
    sum_rate,
    validate_snr_grid,
    zf_receive,
)
from .schemes import (
    CANDIDATE_DRAWS,
    GENERIC_PHASE_MARGIN,
    SCHEME_TAGS,
    AlignmentPair,
    BeamformerSet,
    SchemeDescriptor,
    build_acs_ic3,
    build_cognitive_x,
    build_phase_alignment,
    build_scheme,
    build_uplinks,
    build_x_channel,
    sample_feasible_channel,
    scheme_channel_shape,
    scheme_feasibility_kind,
)
from .verify import (
    ConditionRecord,
    ConditionReport,
    ContainmentDemo,
    DegenerateAnglesError,
    IndependenceReport,
    InfeasibleChannelError,
    ReceiverIndependence,
    alignment_residual,
    check_conditions,
    demonstrate_containment,
    independence_margin,
    solve_phasor_pair,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationCheck",
    "AllocationProfile",
    "AlignmentPair",
    "BeamformerSet",
    "BoundResult",
    "CANDIDATE_DRAWS",
    "ComplexChannelMatrix",
    "ConditionRecord",
    "ConditionReport",
    "ContainmentDemo",
    "DEFAULT_SNR_GRID_DB",
    "GENERIC_PHASE_MARGIN",
    "DegenerateAnglesError",
    "DofEstimate",
    "ExtendedRotation",
    "IndependenceReport",
    "InfeasibleChannelError",
    "RankDeficientReceiverError",
    "RateReport",
    "RealLiftedVector",
    "ReceiverIndependence",
    "SCHEME_TAGS",
    "SchemeDescriptor",
    "SearchSpaceError",
    "StreamRate",
    "alignment_residual",
    "baseline_best_sum_rate",
    "baseline_circsym",
    "baseline_rate_profile",
    "build_acs_ic3",
    "build_cognitive_x",
    "build_phase_alignment",
    "build_scheme",
    "build_uplinks",
    "build_x_channel",
    "check_allocation",
    "check_conditions",
    "construct_special_channel",
    "demonstrate_containment",
    "dump_channel",
    "estimate_baseline_dof",
    "estimate_dof",
    "extend_rotation",
    "independence_margin",
    "iter_feasible_profiles",
    "lift",
    "load_channel",
    "max_dof",
    "mod_distance",
    "rotation_matrix",
    "sample_channel",
    "sample_feasible_channel",
    "scheme_channel_shape",
    "scheme_feasibility_kind",
    "solve_phasor_pair",
    "special_channel_kinds",
    "sum_rate",
    "unlift",
    "validate_snr_grid",
    "zf_receive",
]
