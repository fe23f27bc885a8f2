// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace gem::schedule {

/// Strictly decreasing noise levels sigma_0 > ... > sigma_T = 0.
class NoiseSchedule {
public:
    explicit NoiseSchedule(std::vector<double> sigmas);

    // T denoise steps on the EDM power-rho ramp from sigma_max to sigma_min, then 0.
    static NoiseSchedule karras(std::size_t steps, double sigma_min, double sigma_max, double rho = 7.0);

    std::size_t steps() const { return m_sigmas.size() - 1; }
    double operator[](std::size_t j) const { return m_sigmas[j]; }
    double max_sigma() const { return m_sigmas.front(); }
    const std::vector<double>& sigmas() const { return m_sigmas; }

private:
    std::vector<double> m_sigmas;
};

/// Window W frames, stride s schedule indices between adjacent frames, T indices per frame.
struct ScheduleConfig {
    std::size_t window = 25;
    std::size_t stride = 2;
    std::size_t steps = 50;

    // W, s, T >= 1 and (W - 1) * s <= T.
    void validate() const;
    // Additionally T <= W * s, so each appended frame enters exactly on its pyramid slot.
    void validate_for_sampling() const;

    // Stride T / W; throws when T is not a multiple of W.
    static ScheduleConfig with_default_stride(std::size_t window, std::size_t steps);
};

/// Noise index of the frame at window offset t on row m: clamp(m - t*s, 0, T).
std::size_t noise_index(std::size_t row, std::size_t frame, const ScheduleConfig& cfg);

/// Per-frame sigma for one row of the scheduling matrix.
std::vector<double> schedule_row(long long row, const ScheduleConfig& cfg, const NoiseSchedule& ns);

/// Rows (one model forward pass each) needed to fully denoise F frames: T + (F - 1) * s.
std::size_t total_forward_passes(std::size_t frames, const ScheduleConfig& cfg);

/// Full matrix for a video of F frames indexed by absolute frame; rows 0 .. total_forward_passes.
std::vector<std::vector<double>> schedule_matrix(std::size_t frames, const ScheduleConfig& cfg,
                                                 const NoiseSchedule& ns);

struct TimeLookup {
    double t = 0.0;
    bool clamped = false;
};

/// Monotone map between noise level and the training time axis.
class SigmaTimeMap {
public:
    virtual ~SigmaTimeMap() = default;
    virtual TimeLookup sigma_to_time(double sigma) const = 0;
    virtual double time_to_sigma(double t) const = 0;
};

/// Log-linear map. t = 1 at sigma_min (clean end of the axis), t = 0 at sigma_max, so that
/// the per-frame time offsets decrease t along the frame axis while noise increases.
class LogLinearSigmaTimeMap final : public SigmaTimeMap {
public:
    LogLinearSigmaTimeMap(double sigma_min = 0.002, double sigma_max = 700.0);

    TimeLookup sigma_to_time(double sigma) const override;
    double time_to_sigma(double t) const override;

    double sigma_min() const { return m_sigma_min; }
    double sigma_max() const { return m_sigma_max; }

private:
    double m_sigma_min;
    double m_sigma_max;
    double m_log_min;
    double m_log_max;
};

struct TrainingNoiseConfig {
    double p_mean = -1.2;
    double p_std = 1.2;
    double alpha = 2.0;
    double beta = 5.0;
    // Negative means "use the default 0.5 / (N - 1)".
    double jitter_std = -1.0;
    std::size_t frames = 25;
    // Overrides the Beta draw when set.
    std::optional<double> fixed_t_shift;

    void validate() const;
    double effective_jitter_std() const;
};

struct TrainingSigmas {
    double log_sigma = 0.0;
    double t_intercept = 0.0;
    double t_shift = 0.0;
    std::vector<double> times;
    std::vector<double> sigmas;
    bool clamped = false;
};

/// Per-frame training noise levels: t_i = t_intercept - (i / (N - 1) - t_shift) plus bounded
/// jitter, clamped to [0, 1] and mapped back to sigma.
TrainingSigmas training_frame_sigmas(const TrainingNoiseConfig& cfg, const SigmaTimeMap& map,
                                     std::mt19937_64& rng);

/// Beta(alpha, beta) via two Gamma draws.
double sample_beta(double alpha, double beta, std::mt19937_64& rng);

}  // namespace gem::schedule
