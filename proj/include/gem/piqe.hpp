// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "gem/tensor.hpp"

namespace gem::curation {

struct PiqeConfig {
    std::size_t block_size = 16;
    double activity_threshold = 0.1;   // MSCN block variance above which a block is spatially active
    double impaired_threshold = 0.1;   // edge-segment std below which a block shows a noticeable artifact
    std::size_t segment_length = 6;
    std::size_t gaussian_window = 7;
    double gaussian_sigma = 7.0 / 6.0;
    double stabilizer = 1.0;           // MSCN denominator constant, in 8-bit intensity units
};

struct PiqeResult {
    double score = 100.0;  // [0, 100], higher = more distorted
    std::size_t blocks = 0;
    std::size_t active_blocks = 0;
    std::size_t artifact_blocks = 0;
    std::size_t noise_blocks = 0;
    bool no_activity = false;
};

/// Mean-subtracted contrast-normalized coefficients of an [H, W] image on the 0..255 scale.
Tensor mscn_coefficients(const Tensor& image_255, const PiqeConfig& cfg = {});

/// Block-based perceptual distortion score of an [H, W] luminance image in [0, 1].
PiqeResult piqe(const Tensor& luminance, const PiqeConfig& cfg = {});

inline double piqe_score(const Tensor& luminance) { return piqe(luminance).score; }

}  // namespace gem::curation
