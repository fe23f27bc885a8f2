// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gem/control.hpp"
#include "gem/metrics.hpp"
#include "gem/tensor.hpp"

namespace gem::io {

/// Pseudo-labelers and feature extractors consumed by curation, control-prep and evaluation.
/// Images are [H, W] luminance or [C, H, W] in [0, 1]. Failures throw ProviderError.
class Providers {
public:
    virtual ~Providers() = default;

    // [d, H/stride, W/stride] patch features.
    virtual control::FeatureMap features(const Tensor& image, const nlohmann::json& params) = 0;
    // [2, H, W] displacement from source to target, pixels.
    virtual control::FlowField flow(const Tensor& source, const Tensor& target, const nlohmann::json& params) = 0;
    // [H, W] metric depth, strictly positive.
    virtual Tensor depth(const Tensor& image, const nlohmann::json& params) = 0;
    // Aesthetic score in [0, 10].
    virtual double aesthetic(const Tensor& image, const nlohmann::json& params) = 0;
    // params: {"video": id, "frame": index}
    virtual std::vector<metrics::Detection> detections(const nlohmann::json& params) = 0;
    virtual std::vector<metrics::KeypointSet> pose(const nlohmann::json& params) = 0;
};

enum class FlowKind { Zero, Constant, Affine, Translation };

/// dx = a[0] + a[1] x + a[2] y, dy = a[3] + a[4] x + a[5] y for Affine.
struct FlowModel {
    FlowKind kind = FlowKind::Translation;
    double dx = 0.0;
    double dy = 0.0;
    std::array<double, 6> affine{};
    int max_shift = 8;  // search radius for Translation
};

/// depth = base + slope_x * x + slope_y * y (meters); a plain plane z = base by default.
struct DepthModel {
    double base = 10.0;
    double slope_x = 0.0;
    double slope_y = 0.0;
};

struct SyntheticConfig {
    std::uint64_t seed = 0;
    std::size_t feature_dim = 64;
    std::size_t patch_stride = control::kDefaultPatchStride;
    FlowModel flow;
    DepthModel depth;
    std::filesystem::path fixtures;  // JSON with "detections" and "pose" playback tables
};

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

/// Deterministic desk-scale stand-ins. Pure functions of (input, seed, params).
class SyntheticProviders final : public Providers {
public:
    explicit SyntheticProviders(SyntheticConfig cfg = {});

    control::FeatureMap features(const Tensor& image, const nlohmann::json& params) override;
    control::FlowField flow(const Tensor& source, const Tensor& target, const nlohmann::json& params) override;
    Tensor depth(const Tensor& image, const nlohmann::json& params) override;
    double aesthetic(const Tensor& image, const nlohmann::json& params) override;
    std::vector<metrics::Detection> detections(const nlohmann::json& params) override;
    std::vector<metrics::KeypointSet> pose(const nlohmann::json& params) override;

    const SyntheticConfig& config() const { return m_cfg; }

private:
    const nlohmann::json& fixture_table(const std::string& key);

    SyntheticConfig m_cfg;
    nlohmann::json m_fixtures;
    bool m_fixtures_loaded = false;
};

/// [H, W] view of an image: rank-2 passes through, [C, H, W] is averaged over channels.
Tensor to_luminance(const Tensor& image);

/// FNV-1a over the float bit patterns, mixed with a seed.
std::uint64_t content_hash(std::span<const float> values, std::uint64_t seed);

/// Integer global shift (dx, dy) minimizing the mean squared difference target(y+dy, x+dx) vs source(y, x).
std::array<int, 2> estimate_translation(const Tensor& source, const Tensor& target, int max_shift);

}  // namespace gem::io
