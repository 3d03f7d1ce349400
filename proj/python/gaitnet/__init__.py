"""Bidirectional gait model: forward pose regressor and backward
condition-inference networks over a deterministic synthetic gait oracle.

The heavy lifting lives in the C++ extension ``gaitnet._core``; this package
re-exports its surface.
"""

from ._core import (  # noqa: F401
    FRAMES,
    AdamState,
    BgnConfig,
    Bgn,
    CoverageResult,
    Dataset,
    FgnConfig,
    ForwardEval,
    Network,
    Oracle,
    RealizabilityEval,
    Schema,
    build_bgn,
    build_fgn,
    d_gait,
    d_pose,
    d_rot,
    decode_muscle,
    default_expert_configs,
    denormalize_condition,
    desk_schema,
    encode,
    eval_backward_realizability,
    eval_coverage,
    eval_forward,
    forward,
    generate,
    joint_angle_error_deg,
    kl_diag_gaussian,
    load_bundle,
    load_dataset,
    load_fgn,
    load_schema,
    mlp_new,
    normalize_condition,
    normalized_distance,
    phase_features,
    posterior_mean_muscle,
    posterior_samples,
    reparam_sample,
    rollout,
    rot_decode,
    rot_encode,
    sample_grid,
    sample_uniform,
    save_bundle,
    save_dataset,
    save_fgn,
    save_schema,
    schema_hash,
    select_expert,
    set_max_threads,
    simulate,
    split_holdout,
    train_bgn,
    train_experts,
    train_fgn,
)

__all__ = [name for name in dir() if not name.startswith("_")]
