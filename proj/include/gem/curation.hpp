// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gem/control.hpp"
#include "gem/piqe.hpp"
#include "gem/providers.hpp"

namespace gem::curation {

inline constexpr double kClipSeconds = 2.5;

struct ClipSpan {
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;  // exclusive
};

/// Consecutive non-overlapping spans of round(2.5 * fps) frames; the partial tail is dropped.
std::vector<ClipSpan> segment_clips(std::size_t total_frames, double fps);

/// Filter stages in cascade order.
enum class Stage { Aesthetic, Piqe, IntraDiversity, Motion, CrossSimilarity };
inline constexpr std::array<Stage, 5> kStageOrder = {Stage::Aesthetic, Stage::Piqe, Stage::IntraDiversity,
                                                     Stage::Motion, Stage::CrossSimilarity};
std::string_view stage_name(Stage stage);

enum class MotionMode { StartEnd, AdjacentMean };

struct FilterConfig {
    // A clip is kept when aesthetic > aesthetic_min, piqe < piqe_max, intra > intra_min,
    // motion > motion_min and its cross-clip similarity stays < cross_max.
    double aesthetic_min = 4.2;
    double piqe_max = 70.0;
    double intra_min = 0.02;
    double motion_min = 0.02;
    double cross_max = 0.95;
    double intra_cosine = 0.5;
    MotionMode motion_mode = MotionMode::StartEnd;
    std::array<bool, 5> enabled{true, true, true, true, true};
    PiqeConfig piqe;

    bool is_enabled(Stage s) const { return enabled[static_cast<std::size_t>(s)]; }
    double threshold(Stage s) const;
    void validate() const;
};

FilterConfig filter_config_from_json(const nlohmann::json& j);

/// Fraction of cells whose first/last cosine similarity is below tau. Zero vectors count as similarity 0.
double intra_clip_diversity(const control::FeatureMap& first, const control::FeatureMap& last, double tau = 0.5);

/// Mean flow magnitude normalized by the image diagonal.
double motion_score(const control::FlowField& flow);

/// Greedy scan: keep i iff cos(i, k) < tau for every already-kept k. Returns kept indices.
std::vector<std::size_t> cross_clip_filter(const std::vector<std::vector<float>>& unit_vectors, double tau);

/// Normalized mean token of a feature map (the clip's global descriptor).
std::vector<float> pooled_descriptor(const control::FeatureMap& features);

struct VideoEntry {
    std::string video_id;
    std::filesystem::path path;
    double fps = 10.0;
    std::size_t frames = 0;
};

std::vector<VideoEntry> read_manifest(const std::filesystem::path& path);

/// Decoded frames as [H, W] luminance.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual Tensor frame(const VideoEntry& video, std::size_t index) = 0;
};

/// Reads each video's GEMT tensor ([N, H, W] or [N, C, H, W]) and keeps the latest one cached.
class GemtFrameSource final : public FrameSource {
public:
    Tensor frame(const VideoEntry& video, std::size_t index) override;

private:
    std::string m_cached_id;
    std::optional<Tensor> m_cached;
};

struct ClipScores {
    std::optional<double> aesthetic;
    std::optional<double> piqe;
    bool piqe_no_activity = false;
    std::optional<double> intra_diversity;
    std::optional<double> motion;
    std::optional<double> cross_similarity;  // max cosine to an earlier kept clip of the same video
};

enum class ClipStatus { Kept, Dropped, Unscored };

struct ClipRecord {
    std::string video_id;
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;
    double fps = 0.0;
    ClipScores scores;
    std::array<std::optional<bool>, 5> verdicts{};  // per stage: kept?
    ClipStatus status = ClipStatus::Kept;
    std::optional<Stage> dropped_at;
    std::string error;
};

struct StageReport {
    Stage stage = Stage::Aesthetic;
    bool enabled = true;
    double threshold = 0.0;
    std::size_t input = 0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
    double percent = 100.0;  // survivors after this stage relative to all scored clips
};

struct CurationReport {
    std::size_t total_clips = 0;
    std::size_t scored_clips = 0;
    std::size_t unscored_clips = 0;
    std::vector<StageReport> stages;
    std::vector<ClipRecord> clips;

    std::vector<ClipRecord> kept() const;
    nlohmann::json to_json() const;
};

/// Segments every video into clips and runs the filter cascade.
CurationReport run_pipeline(const std::vector<VideoEntry>& manifest, const FilterConfig& cfg,
                            io::Providers& providers, FrameSource& frames);

/// Runs the cascade on already-segmented clips; each clip's video must be in `videos`.
CurationReport run_clips(const std::vector<VideoEntry>& videos, std::vector<ClipRecord> clips,
                         const FilterConfig& cfg, io::Providers& providers, FrameSource& frames);

}  // namespace gem::curation
