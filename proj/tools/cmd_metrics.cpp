// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "commands.hpp"
#include "gem/error.hpp"
#include "gem/json_io.hpp"
#include "gem/metrics.hpp"

namespace gem::cli {

namespace {

using nlohmann::json;

struct MetricArgs {
    std::string pred;
    std::string gt;
    std::string out;
    // com
    bool detections = false;
    std::string norm = "l2";
    // pose-ap
    std::string area = "all";
    std::vector<double> thresholds;
};

void emit(const MetricArgs& a, const json& result) {
    if (a.out.empty() || a.out == "-")
        std::cout << result.dump(2) << '\n';
    else
        io::write_json_file(a.out, result);
}

// Lines are either one box (array or null) per frame, or, with --detections, one list of
// labeled detections per frame from which the largest vehicle is tracked.
metrics::BoxTrack read_track(const std::string& path, bool detections) {
    const auto lines = io::read_json_lines(path);
    if (detections) {
        std::vector<std::vector<metrics::Detection>> per_frame;
        for (const auto& line : lines) {
            require(line.is_array(), path + ": each line must be a list of detections");
            auto& frame = per_frame.emplace_back();
            for (const auto& d : line)
                frame.push_back(io::detection_from_json(d));
        }
        return metrics::select_largest_vehicle(per_frame);
    }
    metrics::BoxTrack track;
    for (const auto& line : lines)
        track.push_back(line.is_null() ? std::nullopt : std::optional(io::box_from_json(line)));
    return track;
}

std::vector<std::vector<metrics::KeypointSet>> read_people(const std::string& path) {
    std::vector<std::vector<metrics::KeypointSet>> images;
    for (const auto& line : io::read_json_lines(path)) {
        require(line.is_array(), path + ": each line must be a list of keypoint sets");
        auto& people = images.emplace_back();
        for (const auto& p : line)
            people.push_back(io::keypoint_set_from_json(p));
    }
    return images;
}

void run_ade(const MetricArgs& a) {
    const auto pred = io::read_trajectory(a.pred);
    const auto gt = io::read_trajectory(a.gt);
    emit(a, {{"ade", metrics::ade(pred, gt)}, {"points", pred.size()}});
}

void run_com(const MetricArgs& a) {
    require(a.norm == "l2" || a.norm == "l1", "--norm must be l2 or l1");
    const auto r = metrics::com(read_track(a.pred, a.detections), read_track(a.gt, a.detections),
                                a.norm == "l1" ? metrics::CenterNorm::L1 : metrics::CenterNorm::L2);
    emit(a, {{"com", r.value}, {"frames_compared", r.frames_compared}, {"frames_skipped", r.frames_skipped},
             {"norm", a.norm}});
}

void run_depth(const MetricArgs& a) {
    const auto r = metrics::depth_metrics(tensor_read(a.pred), tensor_read(a.gt));
    emit(a, {{"abs_rel", r.abs_rel}, {"delta", r.delta}, {"valid_pixels", r.valid_pixels}});
}

void run_pose_ap(const MetricArgs& a) {
    metrics::AreaRange area;
    if (a.area == "large")
        area = metrics::AreaRange::large();
    else
        require(a.area == "all", "--area must be all or large");
    const auto thresholds = a.thresholds.empty() ? metrics::coco_oks_thresholds() : a.thresholds;
    const auto r = metrics::keypoint_ap(read_people(a.pred), read_people(a.gt), thresholds, area);
    emit(a, {{"ap", r.mean}, {"thresholds", r.thresholds}, {"per_threshold", r.per_threshold},
             {"num_gt", r.num_gt}, {"area", a.area}});
}

CLI::App* add_metric(CLI::App& parent, const std::string& name, const std::string& desc,
                     const std::shared_ptr<MetricArgs>& args) {
    auto* cmd = parent.add_subcommand(name, desc);
    cmd->add_option("--pred", args->pred, "Prediction file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--gt", args->gt, "Ground-truth file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", args->out, "Output result.json (stdout when omitted)");
    return cmd;
}

}  // namespace

void register_metrics(CLI::App& app) {
    auto* metrics_cmd = app.add_subcommand("metrics", "Controllability metrics");
    metrics_cmd->require_subcommand(1);
    auto args = std::make_shared<MetricArgs>();

    add_metric(*metrics_cmd, "ade", "Average displacement error between trajectory files", args)
        ->callback([args] { run_ade(*args); });

    auto* com = add_metric(*metrics_cmd, "com", "Mean box-center distance between two tracks", args);
    com->add_flag("--detections", args->detections, "Inputs are per-frame detections; track the largest vehicle");
    com->add_option("--norm", args->norm, "Center distance norm: l2 or l1");
    com->callback([args] { run_com(*args); });

    add_metric(*metrics_cmd, "depth", "AbsRel and delta between GEMT depth maps", args)
        ->callback([args] { run_depth(*args); });

    auto* ap = add_metric(*metrics_cmd, "pose-ap", "OKS keypoint average precision", args);
    ap->add_option("--area", args->area, "Ground-truth area range: all or large");
    ap->add_option("--thresholds", args->thresholds, "OKS thresholds (default 0.50:0.05:0.95)");
    ap->callback([args] { run_pose_ap(*args); });
}

}  // namespace gem::cli
