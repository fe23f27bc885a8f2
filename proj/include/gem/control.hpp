// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "gem/tensor.hpp"

namespace gem::control {

inline constexpr std::size_t kDefaultMaxTokens = 32;
inline constexpr std::size_t kDefaultPatchStride = 16;

/// Dense [d, h, w] patch features; one cell covers patch_stride x patch_stride pixels.
struct FeatureMap {
    Tensor grid;
    std::size_t patch_stride = kDefaultPatchStride;

    FeatureMap(Tensor grid, std::size_t patch_stride = kDefaultPatchStride);

    std::size_t dim() const { return grid.extent(0); }
    std::size_t height() const { return grid.extent(1); }
    std::size_t width() const { return grid.extent(2); }
    std::vector<float> cell(std::size_t y, std::size_t x) const;
};

struct Token {
    std::size_t y = 0;
    std::size_t x = 0;
    std::vector<float> vec;
    std::optional<std::size_t> id;
};

/// Mostly-empty per-frame token grid. Cells are unique and in bounds.
struct SparseTokenMap {
    std::size_t frame_index = 0;
    std::size_t dim = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t patch_stride = kDefaultPatchStride;
    std::vector<Token> tokens;

    void validate() const;
    // [d, h, w] with zeros everywhere except the token cells.
    Tensor to_dense() const;
};

/// Fixed table of per-entity embeddings, [L, d].
struct IdentityTable {
    Tensor embeddings;

    std::size_t size() const { return embeddings.extent(0); }
    std::size_t dim() const { return embeddings.extent(1); }

    // L random unit vectors of dimension d, fixed by seed.
    static IdentityTable random(std::size_t size, std::size_t dim, std::uint64_t seed);
};

/// Per-pixel displacement field [2, H, W]; channel 0 = dx, channel 1 = dy, pixels.
struct FlowField {
    Tensor grid;

    explicit FlowField(Tensor grid);
    std::size_t height() const { return grid.extent(1); }
    std::size_t width() const { return grid.extent(2); }
    float dx(std::size_t y, std::size_t x) const { return grid.at(0, y, x); }
    float dy(std::size_t y, std::size_t x) const { return grid.at(1, y, x); }

    static FlowField constant(std::size_t height, std::size_t width, float dx, float dy);
};

/// Keeps m ~ U{0..max_tokens} uniformly chosen cells. forced_count pins m.
SparseTokenMap mask_tokens(const FeatureMap& features, std::size_t max_tokens, std::mt19937_64& rng,
                           std::optional<std::size_t> forced_count = std::nullopt);

/// Gives every token a distinct identity and adds its embedding to the token vector.
SparseTokenMap assign_identities(const SparseTokenMap& map, const IdentityTable& table, std::mt19937_64& rng);

/// Moves tokens by the mean flow over their source patch and re-quantizes to the target grid.
SparseTokenMap translate_tokens(const SparseTokenMap& source, const FlowField& flow, std::size_t target_frame);

// Skeleton rasterization (COCO 17-keypoint convention).

inline constexpr std::size_t kNumKeypoints = 17;

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    int visibility = 0;  // 0 = not labeled, 1 = occluded, 2 = visible
};

using Skeleton = std::array<Keypoint, kNumKeypoints>;

/// Pairs of keypoint indices joined by a limb.
const std::vector<std::array<std::size_t, 2>>& skeleton_limbs();

inline constexpr double kLimbWidth = 3.0;
inline constexpr double kJointRadius = 3.0;

/// [3, H, W] canvas in [0, 1]. Primitives combine with a per-channel max, so person order does not matter.
Tensor rasterize_skeleton(const std::vector<Skeleton>& people, std::size_t height, std::size_t width);

}  // namespace gem::control
