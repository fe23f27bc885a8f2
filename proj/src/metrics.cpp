// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gem/error.hpp"

namespace gem::metrics {

Trajectory::Trajectory(std::size_t dim, std::vector<double> coords) : m_dim(dim), m_coords(std::move(coords)) {
    require(dim >= 1, "trajectory dimension must be >= 1");
    require(m_coords.size() % dim == 0, "trajectory coordinate count is not a multiple of its dimension");
    require(std::all_of(m_coords.begin(), m_coords.end(), [](double v) { return std::isfinite(v); }),
            "trajectory contains non-finite values");
}

void Trajectory::push_back(std::span<const double> p) {
    require(p.size() == m_dim, "point dimension does not match trajectory");
    m_coords.insert(m_coords.end(), p.begin(), p.end());
}

Trajectory Trajectory::scaled(double s) const {
    Trajectory out = *this;
    for (auto& v : out.m_coords)
        v *= s;
    return out;
}

double ade(const Trajectory& a, const Trajectory& b) {
    require(a.size() == b.size(), "ADE needs trajectories of equal length (" + std::to_string(a.size()) + " vs " +
                                      std::to_string(b.size()) + ")");
    require(a.dim() == b.dim(), "ADE needs trajectories of equal dimension");
    require(!a.empty(), "ADE needs at least one point");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d2 = 0.0;
        auto pa = a.point(i), pb = b.point(i);
        for (std::size_t k = 0; k < a.dim(); ++k)
            d2 += (pa[k] - pb[k]) * (pa[k] - pb[k]);
        acc += std::sqrt(d2);
    }
    return acc / double(a.size());
}

double iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

ComResult com(const BoxTrack& generated, const BoxTrack& ground_truth, CenterNorm norm) {
    const std::size_t n = std::max(generated.size(), ground_truth.size());
    ComResult r;
    double acc = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
        const bool has_gen = f < generated.size() && generated[f].has_value();
        const bool has_gt = f < ground_truth.size() && ground_truth[f].has_value();
        if (!has_gen || !has_gt) {
            ++r.frames_skipped;
            continue;
        }
        const double dx = generated[f]->center_x() - ground_truth[f]->center_x();
        const double dy = generated[f]->center_y() - ground_truth[f]->center_y();
        acc += norm == CenterNorm::L2 ? std::hypot(dx, dy) : std::abs(dx) + std::abs(dy);
        ++r.frames_compared;
    }
    require(r.frames_compared > 0, "COM: no frame where both tracks are present");
    r.value = acc / double(r.frames_compared);
    return r;
}

bool is_vehicle_label(const std::string& label) {
    static const std::set<std::string> kVehicles = {"car", "truck", "bus", "vehicle", "van", "motorcycle", "trailer"};
    return kVehicles.count(label) > 0;
}

namespace {

// Larger area first, then lower y_min, then lower x_min.
bool larger_box(const Box& a, const Box& b) {
    if (a.area() != b.area())
        return a.area() > b.area();
    if (a.y_min != b.y_min)
        return a.y_min < b.y_min;
    return a.x_min < b.x_min;
}

}  // namespace

BoxTrack select_largest_vehicle(const std::vector<std::vector<Detection>>& per_frame, double iou_threshold) {
    BoxTrack track(per_frame.size());
    std::optional<Box> last;
    std::size_t f = 0;
    for (; f < per_frame.size() && !last; ++f) {
        for (const auto& d : per_frame[f])
            if (is_vehicle_label(d.label) && d.box.valid() && (!last || larger_box(d.box, *last)))
                last = d.box;
        if (last)
            track[f] = last;
    }
    require(last.has_value(), "no vehicle detections in any frame");

    for (; f < per_frame.size(); ++f) {
        std::optional<Box> best;
        double best_iou = -1.0;
        for (const auto& d : per_frame[f]) {
            if (!is_vehicle_label(d.label) || !d.box.valid())
                continue;
            const double o = iou(d.box, *last);
            if (o < iou_threshold)
                continue;
            if (o > best_iou || (o == best_iou && larger_box(d.box, *best))) {
                best = d.box;
                best_iou = o;
            }
        }
        if (best) {
            track[f] = best;
            last = best;
        }
    }
    return track;
}

DepthResult depth_metrics(const Tensor& pred, const Tensor& gt) {
    require(pred.shape() == gt.shape(), "depth metrics: shape mismatch " + shape_to_string(pred.shape()) + " vs " +
                                            shape_to_string(gt.shape()));
    DepthResult r;
    double abs_rel = 0.0;
    std::size_t within = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const double d = gt[i], p = pred[i];
        if (!(d > 0.0) || !(p > 0.0) || !std::isfinite(d) || !std::isfinite(p))
            continue;
        ++r.valid_pixels;
        abs_rel += std::abs(p - d) / d;
        within += std::max(d / p, p / d) < 1.25;
    }
    require(r.valid_pixels > 0, "depth metrics: no valid pixels");
    r.abs_rel = abs_rel / double(r.valid_pixels);
    r.delta = double(within) / double(r.valid_pixels);
    return r;
}

}  // namespace gem::metrics
