// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/json_io.hpp"

#include <fstream>
#include <map>

#include "gem/error.hpp"

namespace gem::io {

using nlohmann::json;

namespace {

double number_field(const json& j, const char* key) {
    require(j.contains(key) && j.at(key).is_number(), std::string("missing numeric field '") + key + "'");
    return j.at(key).get<double>();
}

}  // namespace

json to_json(const metrics::Box& box) {
    return json::array({box.x_min, box.y_min, box.x_max, box.y_max});
}

metrics::Box box_from_json(const json& j) {
    if (j.is_array()) {
        require(j.size() == 4, "box must have 4 numbers [x_min, y_min, x_max, y_max]");
        for (const auto& v : j)
            require(v.is_number(), "box coordinates must be numbers");
        return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    }
    require(j.is_object(), "box must be an array or object");
    return {number_field(j, "x_min"), number_field(j, "y_min"), number_field(j, "x_max"), number_field(j, "y_max")};
}

json to_json(const metrics::Detection& det) {
    return {{"label", det.label}, {"box", to_json(det.box)}, {"score", det.score}};
}

metrics::Detection detection_from_json(const json& j) {
    require(j.is_object(), "detection must be an object");
    require(j.contains("label") && j.at("label").is_string(), "detection needs a string 'label'");
    require(j.contains("box"), "detection needs a 'box'");
    metrics::Detection d;
    d.label = j.at("label").get<std::string>();
    d.box = box_from_json(j.at("box"));
    d.score = j.value("score", 1.0);
    return d;
}

json to_json(const metrics::KeypointSet& person) {
    json kps = json::array();
    for (const auto& k : person.keypoints) {
        kps.push_back(k.x);
        kps.push_back(k.y);
        kps.push_back(k.visibility);
    }
    return {{"keypoints", kps}, {"score", person.score}, {"area", person.area}};
}

metrics::KeypointSet keypoint_set_from_json(const json& j) {
    require(j.is_object(), "keypoint set must be an object");
    require(j.contains("keypoints") && j.at("keypoints").is_array(), "keypoint set needs a 'keypoints' array");
    const auto& kps = j.at("keypoints");
    require(kps.size() == 3 * control::kNumKeypoints, "'keypoints' must hold 51 numbers");
    metrics::KeypointSet out;
    for (std::size_t i = 0; i < control::kNumKeypoints; ++i) {
        require(kps[3 * i].is_number() && kps[3 * i + 1].is_number() && kps[3 * i + 2].is_number(),
                "keypoint values must be numbers");
        out.keypoints[i].x = kps[3 * i].get<double>();
        out.keypoints[i].y = kps[3 * i + 1].get<double>();
        out.keypoints[i].visibility = static_cast<int>(kps[3 * i + 2].get<double>());
    }
    out.score = j.value("score", 1.0);
    out.area = j.value("area", 0.0);
    require(out.area >= 0.0, "keypoint set area must be non-negative");
    return out;
}

json token_to_json(const control::SparseTokenMap& map, const control::Token& tok) {
    json j = {{"frame", map.frame_index}, {"y", tok.y}, {"x", tok.x}, {"vec", tok.vec}};
    j["id"] = tok.id ? json(*tok.id) : json(nullptr);
    return j;
}

json to_json(const sampler::SamplerTrace& trace) {
    json rows = json::array();
    for (const auto& r : trace.rows)
        rows.push_back({{"row", r.row}, {"frames", r.frames}, {"sigmas", r.sigmas}});
    return {{"rows_executed", trace.rows_executed},
            {"forward_passes", trace.forward_passes},
            {"completion_row", trace.completion_row},
            {"emission_order", trace.emission_order},
            {"phases",
             {{"init", trace.init_rows()},
              {"autoregressive", trace.autoregressive_rows()},
              {"termination", trace.termination_rows()}}},
            {"rows", rows}};
}

std::vector<json> read_json_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
        }
    }
    return out;
}

void write_json_lines(const std::filesystem::path& path, const std::vector<json>& lines) {
    std::ofstream out(path);
    require(out.good(), "cannot write " + path.string());
    for (const auto& j : lines)
        out << j.dump() << '\n';
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    require(out.good(), "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

metrics::Trajectory read_trajectory(const std::filesystem::path& path) {
    const auto lines = read_json_lines(path);
    std::size_t dim = 0;
    std::vector<double> coords;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& p = lines[i];
        require(p.is_array() && !p.empty(), path.string() + ": trajectory line " + std::to_string(i + 1) +
                                                " must be a non-empty array");
        if (i == 0)
            dim = p.size();
        require(p.size() == dim, path.string() + ": inconsistent point dimension");
        for (const auto& v : p) {
            require(v.is_number(), path.string() + ": coordinates must be numbers");
            coords.push_back(v.get<double>());
        }
    }
    return metrics::Trajectory(dim ? dim : 2, std::move(coords));
}

void write_trajectory(const std::filesystem::path& path, const metrics::Trajectory& traj) {
    std::vector<json> lines;
    lines.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto p = traj.point(i);
        lines.emplace_back(std::vector<double>(p.begin(), p.end()));
    }
    write_json_lines(path, lines);
}

std::vector<control::SparseTokenMap> read_token_maps(const std::filesystem::path& path, std::size_t height,
                                                     std::size_t width) {
    std::map<std::size_t, control::SparseTokenMap> by_frame;
    for (const auto& j : read_json_lines(path)) {
        require(j.is_object() && j.contains("frame") && j.contains("y") && j.contains("x") && j.contains("vec"),
                path.string() + ": token lines need frame, y, x and vec");
        const auto frame = j.at("frame").get<std::size_t>();
        auto& map = by_frame[frame];
        map.frame_index = frame;
        map.height = height;
        map.width = width;
        control::Token tok;
        tok.y = j.at("y").get<std::size_t>();
        tok.x = j.at("x").get<std::size_t>();
        tok.vec = j.at("vec").get<std::vector<float>>();
        if (j.contains("id") && !j.at("id").is_null())
            tok.id = j.at("id").get<std::size_t>();
        if (map.tokens.empty())
            map.dim = tok.vec.size();
        map.tokens.push_back(std::move(tok));
    }
    std::vector<control::SparseTokenMap> out;
    for (auto& [frame, map] : by_frame) {
        map.validate();
        out.push_back(std::move(map));
    }
    return out;
}

}  // namespace gem::io
