// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "gem/control.hpp"
#include "gem/metrics.hpp"
#include "gem/schedule.hpp"
#include "gem/tensor.hpp"

namespace gem::sampler {

/// Conditioning signals. Any subset may be absent; the per-frame sequences, when present, are
/// indexed by absolute frame and the sampler hands the denoiser the slice for its window.
struct ConditioningSet {
    std::optional<Tensor> reference_frame;
    std::optional<metrics::Trajectory> trajectory;
    std::vector<control::SparseTokenMap> token_maps;
    std::vector<Tensor> pose_canvases;
    // Absolute frame index of every window slot. Filled in by the samplers.
    std::vector<std::size_t> frame_positions;
};

/// Predicts the clean sample from x at per-frame noise levels. Must be deterministic.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual VideoLatent denoise(const VideoLatent& x, std::span<const double> sigmas,
                                const ConditioningSet& cond) const = 0;
};

/// Returns the target frames at cond.frame_positions (or 0..N-1 when unset).
class PerfectDenoiser final : public Denoiser {
public:
    explicit PerfectDenoiser(VideoLatent target) : m_target(std::move(target)) {}
    VideoLatent denoise(const VideoLatent& x, std::span<const double> sigmas,
                        const ConditioningSet& cond) const override;
    const VideoLatent& target() const { return m_target; }

private:
    VideoLatent m_target;
};

/// lambda * target + (1 - lambda) * x.
class ContractionDenoiser final : public Denoiser {
public:
    ContractionDenoiser(VideoLatent target, double lambda);
    VideoLatent denoise(const VideoLatent& x, std::span<const double> sigmas,
                        const ConditioningSet& cond) const override;

private:
    VideoLatent m_target;
    double m_lambda;
};

/// Exact posterior mean for i.i.d. Gaussian data N(mean, std^2): mean + std^2 / (std^2 + sigma^2) (x - mean).
class GaussianDenoiser final : public Denoiser {
public:
    GaussianDenoiser(double mean, double std);
    VideoLatent denoise(const VideoLatent& x, std::span<const double> sigmas,
                        const ConditioningSet& cond) const override;

private:
    double m_mean;
    double m_var;
};

class FunctionDenoiser final : public Denoiser {
public:
    using Fn = std::function<VideoLatent(const VideoLatent&, std::span<const double>, const ConditioningSet&)>;
    explicit FunctionDenoiser(Fn fn) : m_fn(std::move(fn)) {}
    VideoLatent denoise(const VideoLatent& x, std::span<const double> sigmas,
                        const ConditioningSet& cond) const override {
        return m_fn(x, sigmas, cond);
    }

private:
    Fn m_fn;
};

/// One Euler step of the probability-flow ODE with per-frame noise levels:
/// x_t += (next_t - cur_t) * (x_t - D(x)_t) / cur_t; frames with cur_t = 0 pass through.
VideoLatent euler_step(const VideoLatent& x, std::span<const double> sigma_cur, std::span<const double> sigma_next,
                       const Denoiser& denoiser, const ConditioningSet& cond);

struct RowRecord {
    std::size_t row = 0;
    std::vector<std::size_t> frames;  // absolute index per window slot
    std::vector<double> sigmas;       // noise level at the start of the row
};

struct SamplerTrace {
    std::size_t rows_executed = 0;
    std::size_t forward_passes = 0;
    std::vector<std::size_t> completion_row;  // per frame: row after which it reached sigma = 0
    std::vector<std::size_t> emission_order;
    std::size_t init_end = 0;            // row at which the first frame completed
    std::size_t autoregressive_end = 0;  // row at which the last frame was appended
    std::vector<RowRecord> rows;

    std::size_t init_rows() const { return init_end; }
    std::size_t autoregressive_rows() const { return autoregressive_end - init_end; }
    std::size_t termination_rows() const { return rows_executed - autoregressive_end; }
};

struct SampleOptions {
    Shape frame_shape{4, 8, 8};  // C, H, W
    LatentKind kind = LatentKind::RgbLatent;
    bool record_rows = true;
};

struct SampleResult {
    VideoLatent frames;
    SamplerTrace trace;
};

/// Rolling-window sampling with the per-frame pyramid schedule: ramp-in, then one frame out and one
/// fresh frame in every `stride` rows, then drain without appending.
SampleResult autoregressive_sample(std::size_t num_frames, const schedule::ScheduleConfig& cfg,
                                   const schedule::NoiseSchedule& ns, const Denoiser& denoiser,
                                   const ConditioningSet& cond, std::mt19937_64& rng,
                                   const SampleOptions& options = {});

struct OverlapResult {
    VideoLatent frames;
    std::size_t chunks = 0;
    std::size_t forward_passes = 0;
};

/// Baseline: chunks of `window` frames denoised jointly through the full schedule, each chunk
/// seeded with the last `overlap` clean frames of the previous one.
OverlapResult overlap_sample(std::size_t num_frames, std::size_t window, std::size_t overlap,
                             const schedule::NoiseSchedule& ns, const Denoiser& denoiser,
                             const ConditioningSet& cond, std::mt19937_64& rng, const SampleOptions& options = {});

/// Number of chunks overlap_sample needs; throws when num_frames is not reachable.
std::size_t overlap_chunk_count(std::size_t num_frames, std::size_t window, std::size_t overlap);

}  // namespace gem::sampler
