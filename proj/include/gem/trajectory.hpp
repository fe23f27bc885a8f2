// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "gem/metrics.hpp"

namespace gem::traj {

/// Camera-to-world rigid transform [R T; 0 1].
using PoseMatrix = Eigen::Matrix4d;

inline constexpr double kRigidTolerance = 1e-6;

bool is_rigid(const PoseMatrix& pose, double tol = kRigidTolerance);
PoseMatrix pose_from_row_major(const std::array<double, 16>& values);

/// (x, z) of every camera expressed in the first camera's frame; starts at (0, 0).
metrics::Trajectory bev_trajectory(const std::vector<PoseMatrix>& poses);

/// Per pose relative to the first: x, y, z followed by the Ortho6D rotation (9 values).
metrics::Trajectory ego_trajectory(const std::vector<PoseMatrix>& poses);

/// First two columns of R, column-major: (R00, R10, R20, R01, R11, R21).
using Ortho6D = std::array<double, 6>;

Ortho6D rot_to_ortho6d(const Eigen::Matrix3d& rotation);
/// Gram-Schmidt on the two halves; throws when they are (near) collinear.
Eigen::Matrix3d ortho6d_to_rot(const Ortho6D& v);

/// Closed-form least-squares scale: sum <est, gt> / sum |est|^2.
double least_squares_scale(const metrics::Trajectory& est, const metrics::Trajectory& gt);

struct ScaleResult {
    double scale = 1.0;
    metrics::Trajectory aligned;
    double ade = 0.0;
};

/// Scale s* minimizing ADE(s * est, gt). The objective is convex in s; the minimizer is found by
/// bisection on its one-sided derivative, starting from the least-squares bracket.
ScaleResult scale_compensate(const metrics::Trajectory& est, const metrics::Trajectory& gt);

}  // namespace gem::traj
