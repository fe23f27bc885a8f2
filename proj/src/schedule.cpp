// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gem/error.hpp"

namespace gem::schedule {

NoiseSchedule::NoiseSchedule(std::vector<double> sigmas) : m_sigmas(std::move(sigmas)) {
    require(m_sigmas.size() >= 2, "noise schedule needs at least two levels");
    require(m_sigmas.back() == 0.0, "noise schedule must end at sigma = 0");
    for (std::size_t j = 0; j + 1 < m_sigmas.size(); ++j) {
        require(std::isfinite(m_sigmas[j]) && m_sigmas[j] > m_sigmas[j + 1],
                "noise schedule must be strictly decreasing (index " + std::to_string(j) + ")");
    }
}

NoiseSchedule NoiseSchedule::karras(std::size_t steps, double sigma_min, double sigma_max, double rho) {
    require(steps >= 1, "schedule needs at least one step");
    require(sigma_min > 0 && sigma_max > sigma_min, "need 0 < sigma_min < sigma_max");
    require(rho > 0, "rho must be positive");
    std::vector<double> sigmas;
    sigmas.reserve(steps + 1);
    if (steps == 1) {
        sigmas = {sigma_max, 0.0};
        return NoiseSchedule(std::move(sigmas));
    }
    const double max_inv_rho = std::pow(sigma_max, 1.0 / rho);
    const double min_inv_rho = std::pow(sigma_min, 1.0 / rho);
    for (std::size_t i = 0; i < steps; ++i) {
        const double ramp = double(i) / double(steps - 1);
        sigmas.push_back(std::pow(max_inv_rho + ramp * (min_inv_rho - max_inv_rho), rho));
    }
    sigmas.push_back(0.0);
    return NoiseSchedule(std::move(sigmas));
}

void ScheduleConfig::validate() const {
    require(window >= 1 && stride >= 1 && steps >= 1, "window, stride and steps must all be >= 1");
    require((window - 1) * stride <= steps,
            "window * stride must not exceed steps + stride (W=" + std::to_string(window) +
                ", s=" + std::to_string(stride) + ", T=" + std::to_string(steps) + ")");
}

void ScheduleConfig::validate_for_sampling() const {
    validate();
    require(steps <= window * stride,
            "steps must not exceed window * stride for autoregressive sampling (W=" + std::to_string(window) +
                ", s=" + std::to_string(stride) + ", T=" + std::to_string(steps) + ")");
}

ScheduleConfig ScheduleConfig::with_default_stride(std::size_t window, std::size_t steps) {
    require(window >= 1 && steps >= 1, "window and steps must be >= 1");
    require(steps % window == 0, "default stride needs steps divisible by window");
    ScheduleConfig cfg{window, steps / window, steps};
    cfg.validate();
    return cfg;
}

std::size_t noise_index(std::size_t row, std::size_t frame, const ScheduleConfig& cfg) {
    const std::size_t offset = frame * cfg.stride;
    if (row <= offset)
        return 0;
    return std::min(row - offset, cfg.steps);
}

std::vector<double> schedule_row(long long row, const ScheduleConfig& cfg, const NoiseSchedule& ns) {
    require(row >= 0, "schedule row must be non-negative");
    cfg.validate();
    require(ns.steps() == cfg.steps, "noise schedule has " + std::to_string(ns.steps()) +
                                         " steps, config expects " + std::to_string(cfg.steps));
    std::vector<double> out(cfg.window);
    for (std::size_t t = 0; t < cfg.window; ++t)
        out[t] = ns[noise_index(static_cast<std::size_t>(row), t, cfg)];
    return out;
}

std::size_t total_forward_passes(std::size_t frames, const ScheduleConfig& cfg) {
    cfg.validate();
    require(frames >= cfg.window, "frame count " + std::to_string(frames) + " is smaller than the window " +
                                      std::to_string(cfg.window));
    return cfg.steps + (frames - 1) * cfg.stride;
}

std::vector<std::vector<double>> schedule_matrix(std::size_t frames, const ScheduleConfig& cfg,
                                                 const NoiseSchedule& ns) {
    const std::size_t passes = total_forward_passes(frames, cfg);
    require(ns.steps() == cfg.steps, "noise schedule length does not match config steps");
    std::vector<std::vector<double>> rows(passes + 1, std::vector<double>(frames));
    for (std::size_t m = 0; m <= passes; ++m)
        for (std::size_t a = 0; a < frames; ++a)
            rows[m][a] = ns[noise_index(m, a, cfg)];
    return rows;
}

LogLinearSigmaTimeMap::LogLinearSigmaTimeMap(double sigma_min, double sigma_max)
    : m_sigma_min(sigma_min), m_sigma_max(sigma_max) {
    require(sigma_min > 0 && sigma_max > sigma_min, "need 0 < sigma_min < sigma_max");
    m_log_min = std::log(sigma_min);
    m_log_max = std::log(sigma_max);
}

TimeLookup LogLinearSigmaTimeMap::sigma_to_time(double sigma) const {
    TimeLookup out;
    double s = sigma;
    if (!(s >= m_sigma_min)) {
        s = m_sigma_min;
        out.clamped = true;
    } else if (s > m_sigma_max) {
        s = m_sigma_max;
        out.clamped = true;
    }
    out.t = (m_log_max - std::log(s)) / (m_log_max - m_log_min);
    return out;
}

double LogLinearSigmaTimeMap::time_to_sigma(double t) const {
    const double tc = std::clamp(t, 0.0, 1.0);
    return std::exp(m_log_max - tc * (m_log_max - m_log_min));
}

void TrainingNoiseConfig::validate() const {
    require(p_std > 0, "p_std must be positive");
    require(alpha > 0 && beta > 0, "Beta parameters must be positive");
    require(frames >= 2, "training noise needs at least two frames");
    if (fixed_t_shift)
        require(std::isfinite(*fixed_t_shift), "fixed t_shift must be finite");
}

double TrainingNoiseConfig::effective_jitter_std() const {
    return jitter_std < 0 ? 0.5 / double(frames - 1) : jitter_std;
}

double sample_beta(double alpha, double beta, std::mt19937_64& rng) {
    std::gamma_distribution<double> ga(alpha, 1.0);
    std::gamma_distribution<double> gb(beta, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

TrainingSigmas training_frame_sigmas(const TrainingNoiseConfig& cfg, const SigmaTimeMap& map,
                                     std::mt19937_64& rng) {
    cfg.validate();
    TrainingSigmas out;
    std::normal_distribution<double> log_normal(cfg.p_mean, cfg.p_std);
    out.log_sigma = log_normal(rng);
    const auto lookup = map.sigma_to_time(std::exp(out.log_sigma));
    out.t_intercept = lookup.t;
    out.clamped = lookup.clamped;
    out.t_shift = cfg.fixed_t_shift ? *cfg.fixed_t_shift : sample_beta(cfg.alpha, cfg.beta, rng);

    const std::size_t n = cfg.frames;
    const double spacing = 1.0 / double(n - 1);
    const double jitter_std = cfg.effective_jitter_std();
    // Jitter stays strictly inside half the frame spacing so adjacent frames never swap.
    const double jitter_bound = 0.499 * spacing;
    std::normal_distribution<double> jitter(0.0, jitter_std > 0 ? jitter_std : 1.0);

    out.times.resize(n);
    out.sigmas.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = out.t_intercept - (double(i) * spacing - out.t_shift);
        if (jitter_std > 0)
            t += std::clamp(jitter(rng), -jitter_bound, jitter_bound);
        if (t < 0.0 || t > 1.0) {
            t = std::clamp(t, 0.0, 1.0);
            out.clamped = true;
        }
        out.times[i] = t;
        out.sigmas[i] = map.time_to_sigma(t);
    }
    return out;
}

}  // namespace gem::schedule
