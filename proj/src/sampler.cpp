// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/sampler.hpp"

#include <algorithm>
#include <string>

#include "gem/error.hpp"

namespace gem::sampler {

namespace {

std::vector<std::size_t> positions_or_iota(const ConditioningSet& cond, std::size_t n) {
    if (!cond.frame_positions.empty()) {
        require(cond.frame_positions.size() == n, "frame_positions does not match window size");
        return cond.frame_positions;
    }
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i)
        pos[i] = i;
    return pos;
}

VideoLatent gather_frames(const VideoLatent& source, const std::vector<std::size_t>& positions) {
    auto shape = source.tensor().shape();
    shape[0] = positions.size();
    Tensor out(shape);
    const auto n = source.frame_size();
    for (std::size_t i = 0; i < positions.size(); ++i) {
        require(positions[i] < source.num_frames(), "frame position out of target range");
        auto src = source.frame(positions[i]);
        std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    return VideoLatent(std::move(out), source.kind());
}

void fill_noise(std::span<float> frame, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : frame)
        v = static_cast<float>(sigma * normal(rng));
}

// Window view of the conditioning: per-frame sequences sliced to the given absolute frames.
ConditioningSet window_conditioning(const ConditioningSet& full, const std::optional<Tensor>& reference,
                                    const std::vector<std::size_t>& frames) {
    ConditioningSet out;
    out.reference_frame = reference;
    out.trajectory = full.trajectory;
    out.frame_positions = frames;
    if (!full.token_maps.empty())
        for (auto a : frames)
            out.token_maps.push_back(full.token_maps[a]);
    if (!full.pose_canvases.empty())
        for (auto a : frames)
            out.pose_canvases.push_back(full.pose_canvases[a]);
    return out;
}

void check_sequence_lengths(const ConditioningSet& cond, std::size_t num_frames) {
    require(cond.token_maps.empty() || cond.token_maps.size() == num_frames,
            "token_maps must cover every generated frame");
    require(cond.pose_canvases.empty() || cond.pose_canvases.size() == num_frames,
            "pose_canvases must cover every generated frame");
}

VideoLatent call_denoiser(const Denoiser& denoiser, const VideoLatent& x, std::span<const double> sigmas,
                          const ConditioningSet& cond, std::size_t row) {
    try {
        return euler_step(x, sigmas.first(x.num_frames()), sigmas.subspan(x.num_frames()), denoiser, cond);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ProviderError("denoiser failed at row " + std::to_string(row) + ": " + e.what());
    }
}

}  // namespace

VideoLatent PerfectDenoiser::denoise(const VideoLatent& x, std::span<const double>,
                                     const ConditioningSet& cond) const {
    require(x.frame_shape() == m_target.frame_shape(), "perfect denoiser: frame shape mismatch");
    return gather_frames(m_target, positions_or_iota(cond, x.num_frames()));
}

ContractionDenoiser::ContractionDenoiser(VideoLatent target, double lambda)
    : m_target(std::move(target)), m_lambda(lambda) {
    require(lambda > 0.0 && lambda <= 1.0, "contraction lambda must be in (0, 1]");
}

VideoLatent ContractionDenoiser::denoise(const VideoLatent& x, std::span<const double>,
                                         const ConditioningSet& cond) const {
    require(x.frame_shape() == m_target.frame_shape(), "contraction denoiser: frame shape mismatch");
    VideoLatent out = gather_frames(m_target, positions_or_iota(cond, x.num_frames()));
    auto dst = out.tensor().data();
    auto src = x.tensor().data();
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = static_cast<float>(m_lambda * dst[i] + (1.0 - m_lambda) * src[i]);
    return out;
}

GaussianDenoiser::GaussianDenoiser(double mean, double std) : m_mean(mean), m_var(std * std) {
    require(std > 0.0, "gaussian denoiser std must be positive");
}

VideoLatent GaussianDenoiser::denoise(const VideoLatent& x, std::span<const double> sigmas,
                                      const ConditioningSet&) const {
    require(sigmas.size() == x.num_frames(), "gaussian denoiser: one sigma per frame required");
    VideoLatent out = x;
    for (std::size_t f = 0; f < x.num_frames(); ++f) {
        const double gain = m_var / (m_var + sigmas[f] * sigmas[f]);
        for (auto& v : out.frame(f))
            v = static_cast<float>(m_mean + gain * (double(v) - m_mean));
    }
    return out;
}

VideoLatent euler_step(const VideoLatent& x, std::span<const double> sigma_cur, std::span<const double> sigma_next,
                       const Denoiser& denoiser, const ConditioningSet& cond) {
    const std::size_t n = x.num_frames();
    require(sigma_cur.size() == n && sigma_next.size() == n, "euler_step: one sigma per frame required");
    for (std::size_t t = 0; t < n; ++t) {
        require(sigma_next[t] <= sigma_cur[t],
                "euler_step: sigma_next exceeds sigma_cur at frame " + std::to_string(t));
        require(sigma_next[t] >= 0.0, "euler_step: negative sigma");
    }

    const VideoLatent denoised = denoiser.denoise(x, sigma_cur, cond);
    require(denoised.tensor().shape() == x.tensor().shape(), "denoiser changed the latent shape");

    VideoLatent out = x;
    for (std::size_t t = 0; t < n; ++t) {
        if (sigma_cur[t] == 0.0 || sigma_next[t] == sigma_cur[t])
            continue;
        // Evaluated in double: at sigma_next = 0 the ratio is exactly -1 and the result rounds to D(x).
        const double ratio = (sigma_next[t] - sigma_cur[t]) / sigma_cur[t];
        auto dst = out.frame(t);
        auto d = denoised.frame(t);
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const double xi = dst[i];
            dst[i] = static_cast<float>(xi + ratio * (xi - double(d[i])));
        }
    }
    return out;
}

SampleResult autoregressive_sample(std::size_t num_frames, const schedule::ScheduleConfig& cfg,
                                   const schedule::NoiseSchedule& ns, const Denoiser& denoiser,
                                   const ConditioningSet& cond, std::mt19937_64& rng,
                                   const SampleOptions& options) {
    cfg.validate_for_sampling();
    require(num_frames >= cfg.window, "frame count " + std::to_string(num_frames) +
                                          " is smaller than the window " + std::to_string(cfg.window));
    require(ns.steps() == cfg.steps, "noise schedule has " + std::to_string(ns.steps()) +
                                         " steps, config expects " + std::to_string(cfg.steps));
    require(options.frame_shape.size() == 3, "frame shape must be [C, H, W]");
    check_sequence_lengths(cond, num_frames);

    const auto& fs = options.frame_shape;
    VideoLatent output(num_frames, fs[0], fs[1], fs[2], options.kind);

    std::vector<std::size_t> window_frames(cfg.window);
    VideoLatent window(cfg.window, fs[0], fs[1], fs[2], options.kind);
    for (std::size_t t = 0; t < cfg.window; ++t) {
        window_frames[t] = t;
        fill_noise(window.frame(t), ns.max_sigma(), rng);
    }
    std::size_t next_frame = cfg.window;
    std::optional<Tensor> reference = cond.reference_frame;

    SampleResult result{std::move(output), {}};
    auto& trace = result.trace;
    trace.completion_row.assign(num_frames, 0);

    std::vector<double> sigmas;
    for (std::size_t row = 0; !window_frames.empty(); ++row) {
        const std::size_t n = window_frames.size();
        sigmas.assign(2 * n, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            sigmas[t] = ns[schedule::noise_index(row, window_frames[t], cfg)];
            sigmas[n + t] = ns[schedule::noise_index(row + 1, window_frames[t], cfg)];
        }
        if (options.record_rows)
            trace.rows.push_back({row, window_frames, {sigmas.begin(), sigmas.begin() + static_cast<std::ptrdiff_t>(n)}});

        const auto wcond = window_conditioning(cond, reference, window_frames);
        window = call_denoiser(denoiser, window, sigmas, wcond, row);
        ++trace.forward_passes;
        trace.rows_executed = row + 1;

        // At most one frame completes per row since stride >= 1.
        if (schedule::noise_index(row + 1, window_frames.front(), cfg) != cfg.steps)
            continue;

        const std::size_t done = window_frames.front();
        auto src = window.frame(0);
        std::copy(src.begin(), src.end(), result.frames.frame(done).begin());
        trace.completion_row[done] = row + 1;
        trace.emission_order.push_back(done);
        if (trace.emission_order.size() == 1) {
            trace.init_end = row + 1;
            trace.autoregressive_end = row + 1;
        }
        reference = Tensor(options.frame_shape, std::vector<float>(src.begin(), src.end()));

        // Shift left, append a fresh sigma_0 frame while any remain.
        std::vector<std::size_t> shifted(window_frames.begin() + 1, window_frames.end());
        const bool append = next_frame < num_frames;
        if (append) {
            shifted.push_back(next_frame++);
            trace.autoregressive_end = row + 1;
        }
        if (shifted.empty()) {
            window_frames.clear();
            break;
        }
        VideoLatent next(shifted.size(), fs[0], fs[1], fs[2], options.kind);
        for (std::size_t t = 0; t + 1 < window_frames.size(); ++t) {
            auto from = window.frame(t + 1);
            std::copy(from.begin(), from.end(), next.frame(t).begin());
        }
        if (append)
            fill_noise(next.frame(shifted.size() - 1), ns.max_sigma(), rng);
        window = std::move(next);
        window_frames = std::move(shifted);
    }
    return result;
}

std::size_t overlap_chunk_count(std::size_t num_frames, std::size_t window, std::size_t overlap) {
    require(window >= 1, "window must be >= 1");
    require(overlap < window, "overlap must be smaller than the window");
    require(num_frames >= window, "frame count is smaller than the window");
    const std::size_t fresh = window - overlap;
    require((num_frames - window) % fresh == 0,
            "unreachable frame count " + std::to_string(num_frames) + " for window " + std::to_string(window) +
                " with overlap " + std::to_string(overlap));
    return 1 + (num_frames - window) / fresh;
}

OverlapResult overlap_sample(std::size_t num_frames, std::size_t window, std::size_t overlap,
                             const schedule::NoiseSchedule& ns, const Denoiser& denoiser,
                             const ConditioningSet& cond, std::mt19937_64& rng, const SampleOptions& options) {
    const std::size_t chunks = overlap_chunk_count(num_frames, window, overlap);
    require(options.frame_shape.size() == 3, "frame shape must be [C, H, W]");
    check_sequence_lengths(cond, num_frames);
    const auto& fs = options.frame_shape;

    OverlapResult result{VideoLatent(num_frames, fs[0], fs[1], fs[2], options.kind), chunks, 0};
    std::optional<Tensor> reference = cond.reference_frame;
    std::size_t produced = 0;

    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t seeds = c == 0 ? 0 : overlap;
        const std::size_t first = produced - seeds;
        std::vector<std::size_t> frames(window);
        VideoLatent x(window, fs[0], fs[1], fs[2], options.kind);
        for (std::size_t t = 0; t < window; ++t) {
            frames[t] = first + t;
            if (t < seeds) {
                auto src = result.frames.frame(frames[t]);
                std::copy(src.begin(), src.end(), x.frame(t).begin());
            } else {
                fill_noise(x.frame(t), ns.max_sigma(), rng);
            }
        }
        const auto wcond = window_conditioning(cond, reference, frames);

        std::vector<double> sigmas(2 * window, 0.0);
        for (std::size_t j = 0; j < ns.steps(); ++j) {
            for (std::size_t t = seeds; t < window; ++t) {
                sigmas[t] = ns[j];
                sigmas[window + t] = ns[j + 1];
            }
            x = call_denoiser(denoiser, x, sigmas, wcond, result.forward_passes);
            ++result.forward_passes;
        }
        for (std::size_t t = seeds; t < window; ++t) {
            auto src = x.frame(t);
            std::copy(src.begin(), src.end(), result.frames.frame(frames[t]).begin());
        }
        produced = first + window;
        auto last = result.frames.frame(produced - 1);
        reference = Tensor(options.frame_shape, std::vector<float>(last.begin(), last.end()));
    }
    return result;
}

}  // namespace gem::sampler
