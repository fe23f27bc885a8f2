// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "gem/control.hpp"

namespace gem::control {

namespace {

using Color = std::array<float, 3>;

// COCO order: nose, eyes, ears, shoulders, elbows, wrists, hips, knees, ankles (left before right).
const std::vector<std::array<std::size_t, 2>> kLimbs = {
    {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12}, {5, 6}, {5, 7}, {6, 8},
    {7, 9},   {8, 10},  {1, 2},   {0, 1},   {0, 2},   {1, 3},  {2, 4},  {3, 5}, {4, 6},
};

Color hue_color(std::size_t i, std::size_t n) {
    // Evenly spaced hues, full saturation and value.
    const double h = 6.0 * double(i) / double(n);
    const int sector = static_cast<int>(h) % 6;
    const float f = static_cast<float>(h - std::floor(h));
    switch (sector) {
    case 0: return {1.f, f, 0.f};
    case 1: return {1.f - f, 1.f, 0.f};
    case 2: return {0.f, 1.f, f};
    case 3: return {0.f, 1.f - f, 1.f};
    case 4: return {f, 0.f, 1.f};
    default: return {1.f, 0.f, 1.f - f};
    }
}

bool drawable(const Keypoint& k, std::size_t height, std::size_t width) {
    return k.visibility > 0 && std::isfinite(k.x) && std::isfinite(k.y) && k.x >= 0 && k.y >= 0 &&
           k.x <= double(width) - 1 && k.y <= double(height) - 1;
}

double segment_distance(double px, double py, const Keypoint& a, const Keypoint& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double u = 0.0;
    if (len2 > 0)
        u = std::clamp(((px - a.x) * vx + (py - a.y) * vy) / len2, 0.0, 1.0);
    return std::hypot(px - (a.x + u * vx), py - (a.y + u * vy));
}

// Coverage of a pixel whose center lies `distance` from a shape edge at `radius`; one pixel of ramp.
float coverage(double distance, double radius) {
    return static_cast<float>(std::clamp(radius + 0.5 - distance, 0.0, 1.0));
}

template <typename DistanceFn>
void stamp(Tensor& canvas, double x0, double y0, double x1, double y1, double radius, const Color& color,
           DistanceFn&& distance) {
    const auto height = canvas.extent(1), width = canvas.extent(2);
    const double pad = radius + 1.0;
    const auto lo_x = static_cast<std::size_t>(std::max(0.0, std::floor(std::min(x0, x1) - pad)));
    const auto lo_y = static_cast<std::size_t>(std::max(0.0, std::floor(std::min(y0, y1) - pad)));
    const auto hi_x = std::min<std::size_t>(width - 1, static_cast<std::size_t>(std::ceil(std::max(x0, x1) + pad)));
    const auto hi_y = std::min<std::size_t>(height - 1, static_cast<std::size_t>(std::ceil(std::max(y0, y1) + pad)));
    for (std::size_t y = lo_y; y <= hi_y; ++y)
        for (std::size_t x = lo_x; x <= hi_x; ++x) {
            const float cov = coverage(distance(double(x), double(y)), radius);
            if (cov <= 0.f)
                continue;
            for (std::size_t c = 0; c < 3; ++c)
                canvas.at(c, y, x) = std::max(canvas.at(c, y, x), cov * color[c]);
        }
}

}  // namespace

const std::vector<std::array<std::size_t, 2>>& skeleton_limbs() { return kLimbs; }

Tensor rasterize_skeleton(const std::vector<Skeleton>& people, std::size_t height, std::size_t width) {
    Tensor canvas({3, height, width});
    if (height == 0 || width == 0)
        return canvas;
    for (const auto& person : people) {
        for (std::size_t l = 0; l < kLimbs.size(); ++l) {
            const auto& a = person[kLimbs[l][0]];
            const auto& b = person[kLimbs[l][1]];
            if (!drawable(a, height, width) || !drawable(b, height, width))
                continue;
            stamp(canvas, a.x, a.y, b.x, b.y, kLimbWidth / 2.0, hue_color(l, kLimbs.size()),
                  [&](double px, double py) { return segment_distance(px, py, a, b); });
        }
        for (std::size_t j = 0; j < kNumKeypoints; ++j) {
            const auto& k = person[j];
            if (!drawable(k, height, width))
                continue;
            stamp(canvas, k.x, k.y, k.x, k.y, kJointRadius, hue_color(j, kNumKeypoints),
                  [&](double px, double py) { return std::hypot(px - k.x, py - k.y); });
        }
    }
    return canvas;
}

}  // namespace gem::control
