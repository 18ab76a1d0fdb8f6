"""Langevin samplers over isotropic Gaussian mixtures.

Vanilla, annealed, and patch-chained Langevin dynamics, plus the analysis
tools (escape scans, mode clustering, assumption checks) used to study their
mode-seeking behavior.
"""

from .analysis import (
    ASSUMPTION_KINDS,
    THEOREM_KINDS,
    ClauseCheck,
    EscapeReport,
    ModeReport,
    NullSpaceFrame,
    assumption_check,
    cluster_mode,
    escape_report_from_probe,
    escape_scan,
    marginal_ks,
    mode_frequencies,
    mode_labels,
    null_space_frame,
    null_space_sq_norm,
    theorem_threshold,
    tv_discrete,
)
from .conditional import (
    CompletedPrefixError,
    PatchLayout,
    PrefixState,
    compose_exact_samples,
    conditional_mixture,
    conditional_score,
    prefix_log_weights,
    sample_conditional_exact,
)
from .mixture import (
    GaussianComponent,
    MgfCheckResult,
    MixtureModel,
    SampleBatch,
    log_density,
    mgf_check,
    model_from_json,
    model_to_json,
    perturb,
    responsibilities,
    sample,
    score,
)
from .samplers import (
    ChainBatch,
    DistanceProbe,
    DivergenceError,
    NoiseSchedule,
    SamplerConfig,
    StepSchedule,
    TrajectoryRecord,
    build_geometric_levels,
    build_step_schedule,
    chain_generator,
    expand_schedule,
    run_annealed,
    run_chained,
    run_vanilla,
)

__version__ = "0.1.0"

__all__ = [
    "ASSUMPTION_KINDS",
    "THEOREM_KINDS",
    "ChainBatch",
    "ClauseCheck",
    "CompletedPrefixError",
    "DistanceProbe",
    "DivergenceError",
    "EscapeReport",
    "GaussianComponent",
    "MgfCheckResult",
    "MixtureModel",
    "ModeReport",
    "NoiseSchedule",
    "NullSpaceFrame",
    "PatchLayout",
    "PrefixState",
    "SampleBatch",
    "SamplerConfig",
    "StepSchedule",
    "TrajectoryRecord",
    "assumption_check",
    "build_geometric_levels",
    "build_step_schedule",
    "chain_generator",
    "cluster_mode",
    "compose_exact_samples",
    "conditional_mixture",
    "conditional_score",
    "escape_report_from_probe",
    "escape_scan",
    "expand_schedule",
    "log_density",
    "marginal_ks",
    "mgf_check",
    "mode_frequencies",
    "mode_labels",
    "model_from_json",
    "model_to_json",
    "null_space_frame",
    "null_space_sq_norm",
    "perturb",
    "prefix_log_weights",
    "responsibilities",
    "run_annealed",
    "run_chained",
    "run_vanilla",
    "sample",
    "sample_conditional_exact",
    "score",
    "theorem_threshold",
    "tv_discrete",
]
