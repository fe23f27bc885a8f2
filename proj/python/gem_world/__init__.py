# Copyright (C) 2026 The gem-world Authors
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the GEM world-model toolkit.

Arrays cross the boundary as NumPy float32 (tensors) or float64 (trajectories and poses).
"""

from ._core import (  # noqa: F401
    ProviderError,
    ValidationError,
    ade,
    assign_identities,
    autoregressive_sample,
    bev_trajectory,
    com,
    curate,
    decode_gemt,
    depth_metrics,
    ego_trajectory,
    encode_gemt,
    intra_clip_diversity,
    karras_sigmas,
    keypoint_ap,
    mask_tokens,
    motion_score,
    noise_index,
    oks,
    overlap_sample,
    piqe,
    provider_self_test,
    rasterize_skeleton,
    scale_compensate,
    schedule_matrix,
    segment_clips,
    tensor_read,
    tensor_write,
    total_forward_passes,
    training_frame_sigmas,
    translate_tokens,
)

__version__ = "0.1.0"
