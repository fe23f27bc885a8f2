// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/trajectory.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "gem/error.hpp"

namespace gem::traj {

bool is_rigid(const PoseMatrix& pose, double tol) {
    if (!pose.allFinite())
        return false;
    const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
    if (((r.transpose() * r) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol)
        return false;
    if (std::abs(r.determinant() - 1.0) > tol)
        return false;
    const Eigen::RowVector4d bottom = pose.row(3);
    return (bottom - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() <= tol;
}

PoseMatrix pose_from_row_major(const std::array<double, 16>& v) {
    PoseMatrix p;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            p(r, c) = v[static_cast<std::size_t>(4 * r + c)];
    return p;
}

namespace {

Eigen::Matrix4d rigid_inverse(const PoseMatrix& p) {
    Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
    const Eigen::Matrix3d rt = p.topLeftCorner<3, 3>().transpose();
    inv.topLeftCorner<3, 3>() = rt;
    inv.topRightCorner<3, 1>() = -rt * p.topRightCorner<3, 1>();
    return inv;
}

std::vector<PoseMatrix> relative_to_first(const std::vector<PoseMatrix>& poses) {
    require(!poses.empty(), "trajectory needs at least one pose");
    for (std::size_t i = 0; i < poses.size(); ++i)
        require(is_rigid(poses[i]), "pose " + std::to_string(i) + " is not a rigid transform");
    const Eigen::Matrix4d anchor = rigid_inverse(poses.front());
    std::vector<PoseMatrix> out;
    out.reserve(poses.size());
    for (const auto& p : poses)
        out.push_back(anchor * p);
    return out;
}

}  // namespace

metrics::Trajectory bev_trajectory(const std::vector<PoseMatrix>& poses) {
    metrics::Trajectory out(2);
    for (const auto& rel : relative_to_first(poses)) {
        const double p[2] = {rel(0, 3), rel(2, 3)};
        out.push_back(p);
    }
    return out;
}

metrics::Trajectory ego_trajectory(const std::vector<PoseMatrix>& poses) {
    metrics::Trajectory out(9);
    for (const auto& rel : relative_to_first(poses)) {
        const auto r6 = rot_to_ortho6d(rel.topLeftCorner<3, 3>());
        const double p[9] = {rel(0, 3), rel(1, 3), rel(2, 3), r6[0], r6[1], r6[2], r6[3], r6[4], r6[5]};
        out.push_back(p);
    }
    return out;
}

Ortho6D rot_to_ortho6d(const Eigen::Matrix3d& r) {
    return {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
}

Eigen::Matrix3d ortho6d_to_rot(const Ortho6D& v) {
    const Eigen::Vector3d a(v[0], v[1], v[2]);
    const Eigen::Vector3d b(v[3], v[4], v[5]);
    require(a.allFinite() && b.allFinite(), "ortho6d contains non-finite values");
    require(a.norm() > 1e-12, "ortho6d first column is zero");
    const Eigen::Vector3d b1 = a.normalized();
    const Eigen::Vector3d ortho = b - b.dot(b1) * b1;
    require(ortho.norm() > 1e-9 * std::max(1.0, b.norm()), "ortho6d halves are collinear");
    const Eigen::Vector3d b2 = ortho.normalized();
    Eigen::Matrix3d r;
    r.col(0) = b1;
    r.col(1) = b2;
    r.col(2) = b1.cross(b2);
    return r;
}

namespace {

void check_pair(const metrics::Trajectory& est, const metrics::Trajectory& gt) {
    require(est.size() == gt.size() && est.dim() == gt.dim(), "scale compensation needs matching trajectories");
    require(!est.empty(), "scale compensation needs at least one point");
}

double squared_norm(std::span<const double> p) {
    double s = 0.0;
    for (double v : p)
        s += v * v;
    return s;
}

}  // namespace

double least_squares_scale(const metrics::Trajectory& est, const metrics::Trajectory& gt) {
    check_pair(est, gt);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        auto e = est.point(i), g = gt.point(i);
        for (std::size_t k = 0; k < est.dim(); ++k)
            num += e[k] * g[k];
        den += squared_norm(e);
    }
    require(den > 0.0, "estimated trajectory is all zero; scale is undefined");
    return num / den;
}

ScaleResult scale_compensate(const metrics::Trajectory& est, const metrics::Trajectory& gt) {
    const double s_ls = least_squares_scale(est, gt);
    require(squared_norm(gt.coords()) > 0.0, "ground-truth trajectory is all zero");

    const std::size_t n = est.size(), dim = est.dim();
    // Right derivative of sum_i |s e_i - g_i|; non-decreasing in s.
    auto right_derivative = [&](double s) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto e = est.point(i), g = gt.point(i);
            double rr = 0.0, re = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double r = s * e[k] - g[k];
                rr += r * r;
                re += r * e[k];
            }
            d += rr > 0.0 ? re / std::sqrt(rr) : std::sqrt(squared_norm(e));
        }
        return d;
    };

    // Any minimizer satisfies |s| * sum|e| - sum|g| <= f(s_ls).
    double sum_e = 0.0, sum_g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_e += std::sqrt(squared_norm(est.point(i)));
        sum_g += std::sqrt(squared_norm(gt.point(i)));
    }
    const double bound = (metrics::ade(est.scaled(s_ls), gt) * double(n) + sum_g) / sum_e + 1.0;
    double lo = -bound, hi = bound;
    for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (right_derivative(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }

    ScaleResult r;
    r.scale = hi;
    // The least-squares scale wins exact ties (e.g. noiseless est = c * gt).
    const double ade_hi = metrics::ade(est.scaled(hi), gt);
    const double ade_ls = metrics::ade(est.scaled(s_ls), gt);
    if (ade_ls <= ade_hi)
        r.scale = s_ls;
    r.aligned = est.scaled(r.scale);
    r.ade = metrics::ade(r.aligned, gt);
    return r;
}

}  // namespace gem::traj
