// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "commands.hpp"
#include "gem/error.hpp"
#include "gem/json_io.hpp"
#include "gem/trajectory.hpp"

namespace gem::cli {

namespace {

using nlohmann::json;

struct TrajArgs {
    std::string poses;
    std::string mode = "bev";
    std::string out;
    std::string pred;
    std::string gt;
    bool scale_compensate = false;
};

std::vector<traj::PoseMatrix> read_poses(const std::string& path) {
    std::vector<traj::PoseMatrix> poses;
    for (const auto& line : io::read_json_lines(path)) {
        require(line.is_array() && line.size() == 16, path + ": each pose must be 16 row-major numbers");
        std::array<double, 16> v{};
        for (std::size_t i = 0; i < 16; ++i)
            v[i] = line[i].get<double>();
        poses.push_back(traj::pose_from_row_major(v));
    }
    return poses;
}

void run_convert(const TrajArgs& a) {
    const auto poses = read_poses(a.poses);
    metrics::Trajectory out;
    if (a.mode == "bev")
        out = traj::bev_trajectory(poses);
    else if (a.mode == "ortho6d")
        out = traj::ego_trajectory(poses);
    else
        throw ValidationError("--mode must be bev or ortho6d");
    io::write_trajectory(a.out, out);
    std::cout << "wrote " << out.size() << " points of dimension " << out.dim() << '\n';
}

void run_ade(const TrajArgs& a) {
    const auto pred = io::read_trajectory(a.pred);
    const auto gt = io::read_trajectory(a.gt);
    json result;
    if (a.scale_compensate) {
        const auto r = traj::scale_compensate(pred, gt);
        result = {{"ade", r.ade}, {"scale", r.scale}, {"scale_compensated", true}};
    } else {
        result = {{"ade", metrics::ade(pred, gt)}, {"scale_compensated", false}};
    }
    if (a.out.empty() || a.out == "-")
        std::cout << result.dump(2) << '\n';
    else
        io::write_json_file(a.out, result);
}

}  // namespace

void register_traj(CLI::App& app) {
    auto* traj_cmd = app.add_subcommand("traj", "Ego trajectory conversion and evaluation");
    traj_cmd->require_subcommand(1);
    auto args = std::make_shared<TrajArgs>();

    auto* convert = traj_cmd->add_subcommand("convert", "Camera poses to BEV (x, z) or xyz + ortho6d trajectories");
    convert->add_option("--poses", args->poses, "poses.jsonl, 16 row-major floats per line")
        ->required()
        ->check(CLI::ExistingFile);
    convert->add_option("--mode", args->mode, "bev or ortho6d");
    convert->add_option("--out", args->out, "Output traj.jsonl")->required();
    convert->callback([args] { run_convert(*args); });

    auto* ade = traj_cmd->add_subcommand("ade", "ADE between trajectories, optionally after scale compensation");
    ade->add_option("--pred", args->pred, "Estimated trajectory")->required()->check(CLI::ExistingFile);
    ade->add_option("--gt", args->gt, "Reference trajectory")->required()->check(CLI::ExistingFile);
    ade->add_flag("--scale-compensate", args->scale_compensate, "Rescale the estimate by the ADE-optimal scalar");
    ade->add_option("--out", args->out, "Output result.json (stdout when omitted)");
    ade->callback([args] { run_ade(*args); });
}

}  // namespace gem::cli
