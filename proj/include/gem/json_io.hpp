// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "gem/control.hpp"
#include "gem/metrics.hpp"
#include "gem/sampler.hpp"

// JSON encodings shared by the CLI, the provider protocol and the Python bindings.
namespace gem::io {

nlohmann::json to_json(const metrics::Box& box);
metrics::Box box_from_json(const nlohmann::json& j);

nlohmann::json to_json(const metrics::Detection& det);
metrics::Detection detection_from_json(const nlohmann::json& j);

// {"keypoints": [x0, y0, v0, ... x16, y16, v16], "score": s, "area": a}
nlohmann::json to_json(const metrics::KeypointSet& person);
metrics::KeypointSet keypoint_set_from_json(const nlohmann::json& j);

// One JSON object per token: {"frame", "y", "x", "id", "vec"}.
nlohmann::json token_to_json(const control::SparseTokenMap& map, const control::Token& tok);

nlohmann::json to_json(const sampler::SamplerTrace& trace);

std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& lines);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

// Trajectory files: one JSON array of coordinates per line.
metrics::Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const metrics::Trajectory& traj);

// Token files: JSON lines grouped back into per-frame maps (grid extents taken from the lines).
std::vector<control::SparseTokenMap> read_token_maps(const std::filesystem::path& path, std::size_t height,
                                                     std::size_t width);

}  // namespace gem::io
