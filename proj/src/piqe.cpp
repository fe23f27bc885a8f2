// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/piqe.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gem/error.hpp"

namespace gem::curation {

namespace {

std::vector<double> gaussian_kernel(std::size_t size, double sigma) {
    std::vector<double> k(size);
    const double half = (double(size) - 1.0) / 2.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
        const double d = double(i) - half;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k)
        v /= sum;
    return k;
}

// Separable filter with replicate padding.
std::vector<double> blur(const std::vector<double>& img, std::size_t h, std::size_t w, const std::vector<double>& k) {
    const auto half = static_cast<long>(k.size() / 2);
    auto clampi = [](long v, long hi) { return std::clamp(v, 0L, hi); };
    std::vector<double> tmp(h * w), out(h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long i = 0; i < static_cast<long>(k.size()); ++i)
                acc += k[i] * img[y * w + clampi(long(x) + i - half, long(w) - 1)];
            tmp[y * w + x] = acc;
        }
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long i = 0; i < static_cast<long>(k.size()); ++i)
                acc += k[i] * tmp[clampi(long(y) + i - half, long(h) - 1) * w + x];
            out[y * w + x] = acc;
        }
    return out;
}

template <typename Range>
double sample_variance(const Range& values) {
    const double n = double(values.size());
    if (n < 2)
        return 0.0;
    double mean = 0.0;
    for (double v : values)
        mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    return ss / (n - 1.0);
}

// Any edge segment with (sample) std below the threshold marks a noticeable blocking/blur artifact.
bool has_noticeable_artifact(const std::vector<double>& block, std::size_t n, const PiqeConfig& cfg) {
    std::vector<std::vector<double>> edges(4, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        edges[0][i] = block[i];                     // top
        edges[1][i] = block[i * n + (n - 1)];       // right
        edges[2][i] = block[(n - 1) * n + i];       // bottom
        edges[3][i] = block[i * n];                 // left
    }
    const std::size_t segments = n - cfg.segment_length + 1;
    std::vector<double> seg(cfg.segment_length);
    for (const auto& edge : edges)
        for (std::size_t s = 0; s < segments; ++s) {
            std::copy_n(edge.begin() + static_cast<std::ptrdiff_t>(s), cfg.segment_length, seg.begin());
            if (std::sqrt(sample_variance(seg)) < cfg.impaired_threshold)
                return true;
        }
    return false;
}

// Gaussian noise: block std dominates the normalized center-vs-block std difference.
bool has_noise(const std::vector<double>& block, std::size_t n, double block_var) {
    std::vector<double> center;
    center.reserve((n - 2) * (n - 2));
    for (std::size_t y = 1; y + 1 < n; ++y)
        for (std::size_t x = 1; x + 1 < n; ++x)
            center.push_back(block[y * n + x]);
    const double block_sigma = std::sqrt(block_var);
    const double center_sigma = std::sqrt(sample_variance(center));
    const double denom = std::max(block_sigma, center_sigma);
    const double beta = denom > 0 ? std::abs(block_sigma - center_sigma) / denom : 0.0;
    return block_sigma > 2.0 * beta;
}

}  // namespace

Tensor mscn_coefficients(const Tensor& image, const PiqeConfig& cfg) {
    require(image.rank() == 2, "MSCN expects an [H, W] image");
    const auto h = image.extent(0), w = image.extent(1);
    std::vector<double> img(image.data().begin(), image.data().end());
    std::vector<double> sq(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        sq[i] = img[i] * img[i];
    const auto k = gaussian_kernel(cfg.gaussian_window, cfg.gaussian_sigma);
    const auto mu = blur(img, h, w, k);
    const auto mu_sq = blur(sq, h, w, k);
    Tensor out({h, w});
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double sigma = std::sqrt(std::abs(mu_sq[i] - mu[i] * mu[i]));
        out[i] = static_cast<float>((img[i] - mu[i]) / (sigma + cfg.stabilizer));
    }
    return out;
}

PiqeResult piqe(const Tensor& luminance, const PiqeConfig& cfg) {
    require(luminance.rank() == 2, "PIQE expects an [H, W] luminance image, got " + shape_to_string(luminance.shape()));
    const std::size_t n = cfg.block_size;
    require(cfg.segment_length >= 2 && cfg.segment_length <= n, "segment length must be within the block size");
    require(luminance.extent(0) >= n && luminance.extent(1) >= n, "image smaller than one PIQE block");

    // Crop to whole blocks, scale to 8-bit range.
    const std::size_t h = luminance.extent(0) / n * n, w = luminance.extent(1) / n * n;
    Tensor img({h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            img.at(y, x) = 255.0f * luminance.at(y, x);
    const Tensor mscn = mscn_coefficients(img, cfg);

    PiqeResult result;
    double distortion = 0.0;
    std::vector<double> block(n * n);
    for (std::size_t by = 0; by < h; by += n)
        for (std::size_t bx = 0; bx < w; bx += n) {
            ++result.blocks;
            for (std::size_t y = 0; y < n; ++y)
                for (std::size_t x = 0; x < n; ++x)
                    block[y * n + x] = mscn.at(by + y, bx + x);
            const double var = sample_variance(block);
            if (!(var >= cfg.activity_threshold))
                continue;
            ++result.active_blocks;
            const bool artifact = has_noticeable_artifact(block, n, cfg);
            const bool noise = has_noise(block, n, var);
            result.artifact_blocks += artifact;
            result.noise_blocks += noise;
            // Each active block contributes at most 1, keeping the score within [0, 100].
            const double v = std::min(var, 1.0);
            distortion += (artifact ? 1.0 - v : 0.0) + (noise ? v : 0.0);
        }
    result.no_activity = result.active_blocks == 0;
    result.score = std::clamp(100.0 * (distortion + 1.0) / (double(result.active_blocks) + 1.0), 0.0, 100.0);
    return result;
}

}  // namespace gem::curation
