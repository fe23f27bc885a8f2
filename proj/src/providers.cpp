// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/providers.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "gem/error.hpp"
#include "gem/json_io.hpp"

namespace gem::io {

namespace {

FlowKind flow_kind_from_string(const std::string& s) {
    if (s == "zero") return FlowKind::Zero;
    if (s == "constant") return FlowKind::Constant;
    if (s == "affine") return FlowKind::Affine;
    if (s == "translation") return FlowKind::Translation;
    throw ValidationError("unknown flow kind: " + s);
}

FlowModel flow_model_with(const FlowModel& base, const nlohmann::json& j) {
    FlowModel m = base;
    if (!j.is_object())
        return m;
    if (j.contains("kind")) m.kind = flow_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("dx")) m.dx = j["dx"].get<double>();
    if (j.contains("dy")) m.dy = j["dy"].get<double>();
    if (j.contains("affine")) m.affine = j["affine"].get<std::array<double, 6>>();
    if (j.contains("max_shift")) m.max_shift = j["max_shift"].get<int>();
    return m;
}

DepthModel depth_model_with(const DepthModel& base, const nlohmann::json& j) {
    DepthModel m = base;
    if (!j.is_object())
        return m;
    if (j.contains("base")) m.base = j["base"].get<double>();
    if (j.contains("slope_x")) m.slope_x = j["slope_x"].get<double>();
    if (j.contains("slope_y")) m.slope_y = j["slope_y"].get<double>();
    return m;
}

std::uint64_t seed_with(std::uint64_t seed, const nlohmann::json& params) {
    if (params.is_object() && params.contains("seed"))
        return params["seed"].get<std::uint64_t>();
    return seed;
}

}  // namespace

std::uint64_t content_hash(std::span<const float> values, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ull ^ (seed * 0x9e3779b97f4a7c15ull);
    for (float v : values) {
        auto bits = std::bit_cast<std::uint32_t>(v == 0.0f ? 0.0f : v);  // fold -0 into +0
        for (int i = 0; i < 4; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

Tensor to_luminance(const Tensor& image) {
    if (image.rank() == 2)
        return image;
    require(image.rank() == 3 && image.extent(0) >= 1, "image must be [H, W] or [C, H, W], got " +
                                                           shape_to_string(image.shape()));
    const auto c = image.extent(0), h = image.extent(1), w = image.extent(2);
    Tensor out({h, w});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                out.at(y, x) += image.at(ch, y, x) / float(c);
    return out;
}

std::array<int, 2> estimate_translation(const Tensor& source, const Tensor& target, int max_shift) {
    const Tensor a = to_luminance(source);
    const Tensor b = to_luminance(target);
    require(a.shape() == b.shape(), "flow: source and target shapes differ");
    const int h = static_cast<int>(a.extent(0)), w = static_cast<int>(a.extent(1));
    max_shift = std::max(0, std::min({max_shift, h - 1, w - 1}));

    std::array<int, 2> best{0, 0};
    double best_cost = std::numeric_limits<double>::infinity();
    int best_norm = 0;
    for (int dy = -max_shift; dy <= max_shift; ++dy)
        for (int dx = -max_shift; dx <= max_shift; ++dx) {
            double acc = 0.0;
            std::size_t count = 0;
            for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y)
                for (int x = std::max(0, -dx); x < std::min(w, w - dx); ++x) {
                    const double d = double(b.at(y + dy, x + dx)) - double(a.at(y, x));
                    acc += d * d;
                    ++count;
                }
            const double cost = acc / double(count);
            const int norm = std::abs(dx) + std::abs(dy);
            if (cost < best_cost - 1e-12 || (std::abs(cost - best_cost) <= 1e-12 && norm < best_norm)) {
                best_cost = cost;
                best = {dx, dy};
                best_norm = norm;
            }
        }
    return best;
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
    SyntheticConfig cfg;
    if (!j.is_object())
        return cfg;
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("feature_dim")) cfg.feature_dim = j["feature_dim"].get<std::size_t>();
    if (j.contains("patch_stride")) cfg.patch_stride = j["patch_stride"].get<std::size_t>();
    if (j.contains("flow")) cfg.flow = flow_model_with(cfg.flow, j["flow"]);
    if (j.contains("depth")) cfg.depth = depth_model_with(cfg.depth, j["depth"]);
    if (j.contains("fixtures")) cfg.fixtures = j["fixtures"].get<std::string>();
    return cfg;
}

SyntheticProviders::SyntheticProviders(SyntheticConfig cfg) : m_cfg(std::move(cfg)) {
    require(m_cfg.feature_dim >= 1 && m_cfg.patch_stride >= 1, "synthetic provider: bad feature config");
}

control::FeatureMap SyntheticProviders::features(const Tensor& image, const nlohmann::json& params) {
    const Tensor lum = to_luminance(image);
    const std::size_t stride = m_cfg.patch_stride;
    const std::size_t h = lum.extent(0) / stride, w = lum.extent(1) / stride;
    if (h == 0 || w == 0)
        throw ProviderError("features: image smaller than one patch");
    const std::uint64_t seed = seed_with(m_cfg.seed, params);
    const std::size_t d = m_cfg.feature_dim;

    Tensor grid({d, h, w});
    std::vector<float> patch(stride * stride);
    std::vector<double> v(d);
    for (std::size_t cy = 0; cy < h; ++cy)
        for (std::size_t cx = 0; cx < w; ++cx) {
            for (std::size_t y = 0; y < stride; ++y)
                for (std::size_t x = 0; x < stride; ++x)
                    patch[y * stride + x] = lum.at(cy * stride + y, cx * stride + x);
            std::mt19937_64 rng(content_hash(patch, seed));
            std::normal_distribution<double> normal(0.0, 1.0);
            double norm = 0.0;
            for (auto& e : v) {
                e = normal(rng);
                norm += e * e;
            }
            norm = std::sqrt(norm);
            for (std::size_t c = 0; c < d; ++c)
                grid.at(c, cy, cx) = static_cast<float>(v[c] / norm);
        }
    return control::FeatureMap(std::move(grid), stride);
}

control::FlowField SyntheticProviders::flow(const Tensor& source, const Tensor& target, const nlohmann::json& params) {
    const Tensor src = to_luminance(source);
    const Tensor dst = to_luminance(target);
    if (src.shape() != dst.shape())
        throw ProviderError("flow: source and target shapes differ");
    const FlowModel model = flow_model_with(m_cfg.flow, params);
    const auto h = src.extent(0), w = src.extent(1);
    switch (model.kind) {
    case FlowKind::Zero: return control::FlowField::constant(h, w, 0.f, 0.f);
    case FlowKind::Constant:
        return control::FlowField::constant(h, w, static_cast<float>(model.dx), static_cast<float>(model.dy));
    case FlowKind::Affine: {
        Tensor g({2, h, w});
        const auto& a = model.affine;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                g.at(0, y, x) = static_cast<float>(a[0] + a[1] * double(x) + a[2] * double(y));
                g.at(1, y, x) = static_cast<float>(a[3] + a[4] * double(x) + a[5] * double(y));
            }
        return control::FlowField(std::move(g));
    }
    case FlowKind::Translation: {
        const auto shift = estimate_translation(src, dst, model.max_shift);
        return control::FlowField::constant(h, w, float(shift[0]), float(shift[1]));
    }
    }
    throw ProviderError("flow: unhandled kind");
}

Tensor SyntheticProviders::depth(const Tensor& image, const nlohmann::json& params) {
    const Tensor lum = to_luminance(image);
    const DepthModel m = depth_model_with(m_cfg.depth, params);
    Tensor out({lum.extent(0), lum.extent(1)});
    for (std::size_t y = 0; y < out.extent(0); ++y)
        for (std::size_t x = 0; x < out.extent(1); ++x) {
            const double z = m.base + m.slope_x * double(x) + m.slope_y * double(y);
            if (!(z > 0.0))
                throw ProviderError("depth: analytic surface is not strictly positive");
            out.at(y, x) = static_cast<float>(z);
        }
    return out;
}

double SyntheticProviders::aesthetic(const Tensor& image, const nlohmann::json& params) {
    const std::uint64_t h = content_hash(image.data(), seed_with(m_cfg.seed, params) ^ 0xae57e71cull);
    // Top 53 bits as a uniform fraction.
    return 10.0 * double(h >> 11) / double(1ull << 53);
}

const nlohmann::json& SyntheticProviders::fixture_table(const std::string& key) {
    if (!m_fixtures_loaded) {
        if (m_cfg.fixtures.empty())
            throw ProviderError("fixture missing: no fixture file configured");
        std::ifstream in(m_cfg.fixtures);
        if (!in)
            throw ProviderError("fixture missing: " + m_cfg.fixtures.string());
        try {
            m_fixtures = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("fixture unreadable: ") + e.what());
        }
        m_fixtures_loaded = true;
    }
    if (!m_fixtures.contains(key))
        throw ProviderError("fixture missing: no '" + key + "' table");
    return m_fixtures[key];
}

namespace {

const nlohmann::json& fixture_frame(const nlohmann::json& table, const nlohmann::json& params) {
    if (!params.is_object() || !params.contains("video") || !params.contains("frame"))
        throw ProviderError("fixture playback needs 'video' and 'frame' params");
    const auto video = params["video"].get<std::string>();
    const auto frame = params["frame"].get<std::size_t>();
    if (!table.contains(video) || frame >= table[video].size())
        throw ProviderError("fixture missing: " + video + " frame " + std::to_string(frame));
    return table[video][frame];
}

}  // namespace

std::vector<metrics::Detection> SyntheticProviders::detections(const nlohmann::json& params) {
    std::vector<metrics::Detection> out;
    for (const auto& d : fixture_frame(fixture_table("detections"), params))
        out.push_back(detection_from_json(d));
    return out;
}

std::vector<metrics::KeypointSet> SyntheticProviders::pose(const nlohmann::json& params) {
    std::vector<metrics::KeypointSet> out;
    for (const auto& p : fixture_frame(fixture_table("pose"), params))
        out.push_back(keypoint_set_from_json(p));
    return out;
}

}  // namespace gem::io
