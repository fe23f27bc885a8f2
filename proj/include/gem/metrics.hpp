// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gem/control.hpp"
#include "gem/tensor.hpp"

namespace gem::metrics {

/// Uniformly sampled positions, each of the same dimension (2 for BEV x/z, 3 for x/y/z).
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(std::size_t dim) : m_dim(dim) {}
    Trajectory(std::size_t dim, std::vector<double> coords);

    std::size_t dim() const { return m_dim; }
    std::size_t size() const { return m_dim ? m_coords.size() / m_dim : 0; }
    bool empty() const { return m_coords.empty(); }

    std::span<const double> point(std::size_t i) const {
        return std::span<const double>(m_coords).subspan(i * m_dim, m_dim);
    }
    std::span<double> point(std::size_t i) { return std::span<double>(m_coords).subspan(i * m_dim, m_dim); }
    void push_back(std::span<const double> p);
    const std::vector<double>& coords() const { return m_coords; }

    Trajectory scaled(double s) const;

private:
    std::size_t m_dim = 2;
    std::vector<double> m_coords;
};

/// Mean Euclidean distance between corresponding points.
double ade(const Trajectory& a, const Trajectory& b);

struct Box {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    double area() const { return (x_max - x_min) * (y_max - y_min); }
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }
    bool valid() const { return x_min < x_max && y_min < y_max; }
};

double iou(const Box& a, const Box& b);

/// One optional box per frame.
using BoxTrack = std::vector<std::optional<Box>>;

enum class CenterNorm { L2, L1 };

struct ComResult {
    double value = 0.0;
    std::size_t frames_compared = 0;
    std::size_t frames_skipped = 0;
};

/// Mean distance between box centers on frames where both tracks are present.
ComResult com(const BoxTrack& generated, const BoxTrack& ground_truth, CenterNorm norm = CenterNorm::L2);

struct Detection {
    std::string label;
    Box box;
    double score = 1.0;
};

bool is_vehicle_label(const std::string& label);

inline constexpr double kTrackIouThreshold = 0.3;

/// Largest vehicle of its first frame, tracked forward by greedy max-IoU association.
BoxTrack select_largest_vehicle(const std::vector<std::vector<Detection>>& per_frame,
                                double iou_threshold = kTrackIouThreshold);

struct DepthResult {
    double abs_rel = 0.0;
    double delta = 0.0;  // fraction with max(d/p, p/d) < 1.25
    std::size_t valid_pixels = 0;
};

DepthResult depth_metrics(const Tensor& pred, const Tensor& gt);

/// COCO-style keypoint annotation or prediction.
struct KeypointSet {
    control::Skeleton keypoints{};
    double score = 1.0;
    double area = 0.0;
};

const std::array<double, control::kNumKeypoints>& coco_keypoint_sigmas();

/// Object keypoint similarity of pred against gt using gt's labeled keypoints and area.
double oks(const KeypointSet& pred, const KeypointSet& gt);

/// Ground-truth area filter, (min_area, max_area].
struct AreaRange {
    double min_area = -1.0;
    double max_area = 1e10;

    static AreaRange all() { return {}; }
    static AreaRange large() { return {96.0 * 96.0, 1e10}; }
    bool contains(double area) const { return area > min_area && area <= max_area; }
};

std::vector<double> coco_oks_thresholds();

struct ApResult {
    std::vector<double> thresholds;
    std::vector<double> per_threshold;
    double mean = 0.0;
    std::size_t num_gt = 0;
};

/// 101-point interpolated AP at each OKS threshold. Outer index = image.
ApResult keypoint_ap(const std::vector<std::vector<KeypointSet>>& predictions,
                     const std::vector<std::vector<KeypointSet>>& ground_truth,
                     const std::vector<double>& thresholds = coco_oks_thresholds(),
                     AreaRange area = AreaRange::all());

}  // namespace gem::metrics
