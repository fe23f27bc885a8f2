// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/curation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "gem/error.hpp"
#include "gem/json_io.hpp"

namespace gem::curation {

std::vector<ClipSpan> segment_clips(std::size_t total_frames, double fps) {
    require(fps > 0.0 && std::isfinite(fps), "fps must be positive");
    const auto span = static_cast<std::size_t>(std::llround(kClipSeconds * fps));
    require(span >= 1, "fps too low for a 2.5 s clip");
    std::vector<ClipSpan> out;
    for (std::size_t start = 0; start + span <= total_frames; start += span)
        out.push_back({start, start + span});
    return out;
}

std::string_view stage_name(Stage stage) {
    switch (stage) {
    case Stage::Aesthetic: return "aesthetic";
    case Stage::Piqe: return "piqe";
    case Stage::IntraDiversity: return "intra_diversity";
    case Stage::Motion: return "motion";
    case Stage::CrossSimilarity: return "cross_similarity";
    }
    return "unknown";
}

double FilterConfig::threshold(Stage s) const {
    switch (s) {
    case Stage::Aesthetic: return aesthetic_min;
    case Stage::Piqe: return piqe_max;
    case Stage::IntraDiversity: return intra_min;
    case Stage::Motion: return motion_min;
    case Stage::CrossSimilarity: return cross_max;
    }
    return 0.0;
}

void FilterConfig::validate() const {
    for (double t : {aesthetic_min, piqe_max, intra_min, motion_min, cross_max, intra_cosine})
        require(std::isfinite(t), "filter thresholds must be finite");
}

FilterConfig filter_config_from_json(const nlohmann::json& j) {
    FilterConfig cfg;
    auto num = [&](const char* key, double& dst) {
        if (j.contains(key))
            dst = j[key].get<double>();
    };
    num("aesthetic_min", cfg.aesthetic_min);
    num("piqe_max", cfg.piqe_max);
    num("intra_min", cfg.intra_min);
    num("motion_min", cfg.motion_min);
    num("cross_max", cfg.cross_max);
    num("intra_cosine", cfg.intra_cosine);
    if (j.contains("motion_mode")) {
        const auto m = j["motion_mode"].get<std::string>();
        require(m == "start_end" || m == "adjacent_mean", "motion_mode must be start_end or adjacent_mean");
        cfg.motion_mode = m == "start_end" ? MotionMode::StartEnd : MotionMode::AdjacentMean;
    }
    if (j.contains("enabled"))
        for (auto s : kStageOrder) {
            const std::string name(stage_name(s));
            if (j["enabled"].contains(name))
                cfg.enabled[static_cast<std::size_t>(s)] = j["enabled"][name].get<bool>();
        }
    if (j.contains("piqe")) {
        const auto& p = j["piqe"];
        if (p.contains("block_size")) cfg.piqe.block_size = p["block_size"].get<std::size_t>();
        if (p.contains("activity_threshold")) cfg.piqe.activity_threshold = p["activity_threshold"].get<double>();
        if (p.contains("impaired_threshold")) cfg.piqe.impaired_threshold = p["impaired_threshold"].get<double>();
        if (p.contains("segment_length")) cfg.piqe.segment_length = p["segment_length"].get<std::size_t>();
    }
    cfg.validate();
    return cfg;
}

double intra_clip_diversity(const control::FeatureMap& first, const control::FeatureMap& last, double tau) {
    require(first.grid.shape() == last.grid.shape(), "intra-clip diversity: feature map shapes differ");
    const auto d = first.dim(), h = first.height(), w = first.width();
    std::size_t below = 0;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double a = first.grid.at(c, y, x), b = last.grid.at(c, y, x);
                dot += a * b;
                na += a * a;
                nb += b * b;
            }
            const double cosine = (na > 0 && nb > 0) ? dot / std::sqrt(na * nb) : 0.0;
            below += cosine < tau;
        }
    return double(below) / double(h * w);
}

double motion_score(const control::FlowField& flow) {
    const auto h = flow.height(), w = flow.width();
    if (h == 0 || w == 0)
        return 0.0;
    double acc = 0.0;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            acc += std::hypot(double(flow.dx(y, x)), double(flow.dy(y, x)));
    return acc / double(h * w) / std::hypot(double(h), double(w));
}

namespace {

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    require(a.size() == b.size(), "descriptor dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += double(a[i]) * b[i];
        na += double(a[i]) * a[i];
        nb += double(b[i]) * b[i];
    }
    return (na > 0 && nb > 0) ? dot / std::sqrt(na * nb) : 0.0;
}

}  // namespace

std::vector<std::size_t> cross_clip_filter(const std::vector<std::vector<float>>& unit_vectors, double tau) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < unit_vectors.size(); ++i) {
        const bool distinct = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return cosine(unit_vectors[i], unit_vectors[k]) < tau;
        });
        if (distinct)
            kept.push_back(i);
    }
    return kept;
}

std::vector<float> pooled_descriptor(const control::FeatureMap& features) {
    const auto d = features.dim(), h = features.height(), w = features.width();
    std::vector<double> acc(d, 0.0);
    for (std::size_t c = 0; c < d; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                acc[c] += features.grid.at(c, y, x);
    double norm = 0.0;
    for (double v : acc)
        norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> out(d, 0.0f);
    if (norm > 0)
        for (std::size_t c = 0; c < d; ++c)
            out[c] = static_cast<float>(acc[c] / norm);
    return out;
}

std::vector<VideoEntry> read_manifest(const std::filesystem::path& path) {
    std::vector<VideoEntry> out;
    const auto base = path.parent_path();
    for (const auto& j : io::read_json_lines(path)) {
        VideoEntry v;
        try {
            v.video_id = j.at("video_id").get<std::string>();
            v.path = j.at("path").get<std::string>();
            v.fps = j.at("fps").get<double>();
            v.frames = j.at("frames").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("manifest entry: ") + e.what());
        }
        if (v.path.is_relative())
            v.path = base / v.path;
        out.push_back(std::move(v));
    }
    return out;
}

Tensor GemtFrameSource::frame(const VideoEntry& video, std::size_t index) {
    if (!m_cached || m_cached_id != video.video_id) {
        m_cached = tensor_read(video.path);
        m_cached_id = video.video_id;
        require(m_cached->rank() == 3 || m_cached->rank() == 4,
                video.video_id + ": frames must be [N, H, W] or [N, C, H, W]");
    }
    const Tensor& t = *m_cached;
    require(index < t.extent(0), video.video_id + ": frame " + std::to_string(index) + " out of range");
    Shape shape(t.shape().begin() + 1, t.shape().end());
    auto slab = t.slab(index);
    return io::to_luminance(Tensor(std::move(shape), std::vector<float>(slab.begin(), slab.end())));
}

std::vector<ClipRecord> CurationReport::kept() const {
    std::vector<ClipRecord> out;
    for (const auto& c : clips)
        if (c.status == ClipStatus::Kept)
            out.push_back(c);
    return out;
}

nlohmann::json CurationReport::to_json() const {
    nlohmann::json j;
    j["total_clips"] = total_clips;
    j["scored_clips"] = scored_clips;
    j["unscored_clips"] = unscored_clips;
    j["stages"] = nlohmann::json::array();
    for (const auto& s : stages)
        j["stages"].push_back({{"stage", stage_name(s.stage)},
                               {"enabled", s.enabled},
                               {"threshold", s.threshold},
                               {"input", s.input},
                               {"kept", s.kept},
                               {"dropped", s.dropped},
                               {"percent", s.percent}});
    j["dropped"] = nlohmann::json::array();
    j["unscored"] = nlohmann::json::array();
    std::size_t kept = 0;
    for (const auto& c : clips) {
        nlohmann::json entry = {{"video_id", c.video_id}, {"start_frame", c.start_frame}, {"end_frame", c.end_frame}};
        if (c.status == ClipStatus::Dropped) {
            entry["stage"] = stage_name(*c.dropped_at);
            j["dropped"].push_back(entry);
        } else if (c.status == ClipStatus::Unscored) {
            entry["error"] = c.error;
            j["unscored"].push_back(entry);
        } else {
            ++kept;
        }
    }
    j["kept_clips"] = kept;
    return j;
}

namespace {

class Cascade {
public:
    Cascade(const std::vector<VideoEntry>& videos, const FilterConfig& cfg, io::Providers& providers,
            FrameSource& frames)
        : m_cfg(cfg), m_providers(providers), m_frames(frames) {
        for (const auto& v : videos)
            m_videos.emplace(v.video_id, v);
    }

    void run(std::vector<ClipRecord>& clips) {
        for (auto& c : clips) {
            require(m_videos.count(c.video_id) == 1, "clip refers to unknown video " + c.video_id);
            c.status = ClipStatus::Kept;
            c.dropped_at.reset();
            c.verdicts = {};
            c.error.clear();
        }
        for (auto stage : kStageOrder) {
            if (!m_cfg.is_enabled(stage))
                continue;
            if (stage == Stage::CrossSimilarity)
                cross_stage(clips);
            else
                for (auto& c : clips)
                    if (c.status == ClipStatus::Kept)
                        scalar_stage(stage, c);
        }
    }

private:
    Tensor frame(const ClipRecord& c, std::size_t index) { return m_frames.frame(m_videos.at(c.video_id), index); }
    std::size_t middle(const ClipRecord& c) const { return c.start_frame + (c.end_frame - c.start_frame) / 2; }

    static void mark_unscored(ClipRecord& c, const std::exception& e) {
        c.status = ClipStatus::Unscored;
        c.error = e.what();
    }

    void verdict(ClipRecord& c, Stage stage, bool keep) {
        c.verdicts[static_cast<std::size_t>(stage)] = keep;
        if (!keep) {
            c.status = ClipStatus::Dropped;
            c.dropped_at = stage;
        }
    }

    void scalar_stage(Stage stage, ClipRecord& c) {
        const nlohmann::json no_params = nlohmann::json::object();
        try {
            switch (stage) {
            case Stage::Aesthetic: {
                const double s = m_providers.aesthetic(frame(c, middle(c)), no_params);
                c.scores.aesthetic = s;
                verdict(c, stage, s > m_cfg.aesthetic_min);
                break;
            }
            case Stage::Piqe: {
                const auto r = piqe(frame(c, middle(c)), m_cfg.piqe);
                c.scores.piqe = r.score;
                c.scores.piqe_no_activity = r.no_activity;
                verdict(c, stage, !r.no_activity && r.score < m_cfg.piqe_max);
                break;
            }
            case Stage::IntraDiversity: {
                const auto first = m_providers.features(frame(c, c.start_frame), no_params);
                const auto last = m_providers.features(frame(c, c.end_frame - 1), no_params);
                const double s = intra_clip_diversity(first, last, m_cfg.intra_cosine);
                c.scores.intra_diversity = s;
                verdict(c, stage, s > m_cfg.intra_min);
                break;
            }
            case Stage::Motion: {
                double s = 0.0;
                if (m_cfg.motion_mode == MotionMode::StartEnd || c.end_frame - c.start_frame < 2) {
                    s = motion_score(m_providers.flow(frame(c, c.start_frame), frame(c, c.end_frame - 1), no_params));
                } else {
                    for (std::size_t f = c.start_frame; f + 1 < c.end_frame; ++f)
                        s += motion_score(m_providers.flow(frame(c, f), frame(c, f + 1), no_params));
                    s /= double(c.end_frame - c.start_frame - 1);
                }
                c.scores.motion = s;
                verdict(c, stage, s > m_cfg.motion_min);
                break;
            }
            case Stage::CrossSimilarity: break;
            }
        } catch (const ProviderError& e) {
            mark_unscored(c, e);
        }
    }

    // Greedy first-kept deduplication, sequential per video in clip order.
    void cross_stage(std::vector<ClipRecord>& clips) {
        std::map<std::string, std::vector<std::pair<std::size_t, std::vector<float>>>> per_video;
        for (std::size_t i = 0; i < clips.size(); ++i) {
            auto& c = clips[i];
            if (c.status != ClipStatus::Kept)
                continue;
            try {
                auto desc = pooled_descriptor(m_providers.features(frame(c, middle(c)), nlohmann::json::object()));
                per_video[c.video_id].emplace_back(i, std::move(desc));
            } catch (const ProviderError& e) {
                mark_unscored(c, e);
            }
        }
        for (auto& [video, entries] : per_video) {
            std::vector<const std::vector<float>*> kept;
            for (auto& [index, desc] : entries) {
                double worst = -1.0;
                for (const auto* k : kept)
                    worst = std::max(worst, cosine(desc, *k));
                auto& c = clips[index];
                c.scores.cross_similarity = worst;
                const bool keep = worst < m_cfg.cross_max;
                verdict(c, Stage::CrossSimilarity, keep);
                if (keep)
                    kept.push_back(&desc);
            }
        }
    }

    const FilterConfig& m_cfg;
    io::Providers& m_providers;
    FrameSource& m_frames;
    std::map<std::string, VideoEntry> m_videos;
};

}  // namespace

CurationReport run_clips(const std::vector<VideoEntry>& videos, std::vector<ClipRecord> clips,
                         const FilterConfig& cfg, io::Providers& providers, FrameSource& frames) {
    cfg.validate();
    Cascade(videos, cfg, providers, frames).run(clips);

    CurationReport report;
    report.total_clips = clips.size();
    for (const auto& c : clips)
        report.unscored_clips += c.status == ClipStatus::Unscored;
    report.scored_clips = report.total_clips - report.unscored_clips;

    std::size_t input = report.scored_clips;
    for (std::size_t k = 0; k < kStageOrder.size(); ++k) {
        const Stage stage = kStageOrder[k];
        std::size_t survivors = 0;
        for (const auto& c : clips) {
            if (c.status == ClipStatus::Unscored)
                continue;
            if (!c.dropped_at || static_cast<std::size_t>(*c.dropped_at) > k)
                ++survivors;
        }
        StageReport s;
        s.stage = stage;
        s.enabled = cfg.is_enabled(stage);
        s.threshold = cfg.threshold(stage);
        s.input = input;
        s.kept = survivors;
        s.dropped = input - survivors;
        s.percent = report.scored_clips ? 100.0 * double(survivors) / double(report.scored_clips) : 100.0;
        report.stages.push_back(s);
        input = survivors;
    }
    report.clips = std::move(clips);
    return report;
}

CurationReport run_pipeline(const std::vector<VideoEntry>& manifest, const FilterConfig& cfg,
                            io::Providers& providers, FrameSource& frames) {
    std::vector<ClipRecord> clips;
    for (const auto& v : manifest)
        for (const auto& span : segment_clips(v.frames, v.fps)) {
            ClipRecord c;
            c.video_id = v.video_id;
            c.start_frame = span.start_frame;
            c.end_frame = span.end_frame;
            c.fps = v.fps;
            clips.push_back(std::move(c));
        }
    return run_clips(manifest, std::move(clips), cfg, providers, frames);
}

}  // namespace gem::curation
