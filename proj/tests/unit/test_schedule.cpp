// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <doctest.h>

#include "gem/error.hpp"
#include "gem/schedule.hpp"

using namespace gem;
using namespace gem::schedule;

TEST_SUITE("schedule") {
    TEST_CASE("karras ramp endpoints and shape") {
        const auto ns = NoiseSchedule::karras(50, 0.002, 80.0, 7.0);
        REQUIRE(ns.steps() == 50);
        CHECK(ns[0] == doctest::Approx(80.0));
        CHECK(ns[49] == doctest::Approx(0.002));
        CHECK(ns[50] == 0.0);
        // Midpoint of the ramp in sigma^(1/rho) space.
        const double mid = std::pow(0.5 * (std::pow(80.0, 1 / 7.0) + std::pow(0.002, 1 / 7.0)), 7.0);
        const auto odd = NoiseSchedule::karras(3, 0.002, 80.0, 7.0);
        CHECK(odd[1] == doctest::Approx(mid).epsilon(1e-12));
        CHECK(NoiseSchedule::karras(1, 0.1, 1.0).sigmas() == std::vector<double>{1.0, 0.0});
    }

    TEST_CASE("noise schedule validation") {
        CHECK_THROWS_AS(NoiseSchedule({1.0}), ValidationError);
        CHECK_THROWS_AS(NoiseSchedule({1.0, 0.5}), ValidationError);
        CHECK_THROWS_AS(NoiseSchedule({1.0, 1.0, 0.0}), ValidationError);
        CHECK_THROWS_AS(NoiseSchedule::karras(0, 0.1, 1.0), ValidationError);
        CHECK_THROWS_AS(NoiseSchedule::karras(4, 1.0, 0.1), ValidationError);
    }

    TEST_CASE("config validation") {
        CHECK_NOTHROW(ScheduleConfig{25, 2, 50}.validate_for_sampling());
        CHECK_THROWS_AS((ScheduleConfig{25, 3, 50}.validate()), ValidationError);
        CHECK_NOTHROW((ScheduleConfig{5, 1, 20}.validate()));
        CHECK_THROWS_AS((ScheduleConfig{5, 1, 20}.validate_for_sampling()), ValidationError);
        CHECK_THROWS_AS((ScheduleConfig{0, 1, 20}.validate()), ValidationError);
        const auto d = ScheduleConfig::with_default_stride(25, 50);
        CHECK(d.stride == 2);
        CHECK_THROWS_AS(ScheduleConfig::with_default_stride(25, 51), ValidationError);
    }

    TEST_CASE("noise index staircase") {
        const ScheduleConfig cfg{25, 2, 50};
        CHECK(noise_index(0, 0, cfg) == 0);
        CHECK(noise_index(10, 0, cfg) == 10);
        CHECK(noise_index(10, 4, cfg) == 2);
        CHECK(noise_index(10, 5, cfg) == 0);
        CHECK(noise_index(99, 0, cfg) == 50);
        CHECK(noise_index(98, 24, cfg) == 50);
        CHECK(noise_index(97, 24, cfg) == 49);
    }

    TEST_CASE("forward pass count") {
        const ScheduleConfig cfg{25, 2, 50};
        CHECK(total_forward_passes(25, cfg) == 98);
        CHECK(total_forward_passes(50, cfg) == 148);
        CHECK(total_forward_passes(150, cfg) == 348);
        CHECK_THROWS_AS(total_forward_passes(24, cfg), ValidationError);
    }

    TEST_CASE("schedule matrix") {
        const ScheduleConfig cfg{3, 1, 3};
        const auto ns = NoiseSchedule::karras(3, 0.1, 10.0);
        const auto m = schedule_matrix(4, cfg, ns);
        REQUIRE(m.size() == 3 + 3 + 1);
        CHECK(m[0] == std::vector<double>(4, ns[0]));
        CHECK(m.back() == std::vector<double>(4, 0.0));
        CHECK(m[2][0] == ns[2]);
        CHECK(m[2][1] == ns[1]);
        CHECK(m[2][3] == ns[0]);
        CHECK_THROWS_AS(schedule_matrix(4, cfg, NoiseSchedule::karras(4, 0.1, 10.0)), ValidationError);
        CHECK_THROWS_AS(schedule_row(-1, cfg, ns), ValidationError);
    }

    TEST_CASE("log-linear sigma/time map") {
        const LogLinearSigmaTimeMap map(0.002, 700.0);
        CHECK(map.sigma_to_time(700.0).t == doctest::Approx(0.0));
        CHECK(map.sigma_to_time(0.002).t == doctest::Approx(1.0));
        CHECK(map.sigma_to_time(std::sqrt(0.002 * 700.0)).t == doctest::Approx(0.5));
        CHECK_FALSE(map.sigma_to_time(1.0).clamped);
        const auto hi = map.sigma_to_time(1e6);
        CHECK(hi.clamped);
        CHECK(hi.t == 0.0);
        const auto lo = map.sigma_to_time(0.0);
        CHECK(lo.clamped);
        CHECK(lo.t == doctest::Approx(1.0));
        for (double sigma : {0.01, 0.3, 1.0, 42.0, 650.0})
            CHECK(map.time_to_sigma(map.sigma_to_time(sigma).t) == doctest::Approx(sigma).epsilon(1e-12));
        CHECK(map.time_to_sigma(-0.5) == doctest::Approx(700.0));
        CHECK(map.time_to_sigma(2.0) == doctest::Approx(0.002));
        CHECK_THROWS_AS(LogLinearSigmaTimeMap(1.0, 0.5), ValidationError);
    }

    TEST_CASE("training sigmas increase along frames with bounded jitter") {
        const LogLinearSigmaTimeMap map;
        TrainingNoiseConfig cfg;
        std::mt19937_64 rng(3);
        for (int k = 0; k < 300; ++k) {
            const auto r = training_frame_sigmas(cfg, map, rng);
            REQUIRE(r.sigmas.size() == 25);
            for (std::size_t i = 0; i + 1 < 25; ++i) {
                CHECK(r.times[i] >= r.times[i + 1]);
                CHECK(r.sigmas[i] <= r.sigmas[i + 1]);
            }
            for (double t : r.times) {
                CHECK(t >= 0.0);
                CHECK(t <= 1.0);
            }
        }
        CHECK(cfg.effective_jitter_std() == doctest::Approx(0.5 / 24.0));
        cfg.frames = 1;
        CHECK_THROWS_AS(training_frame_sigmas(cfg, map, rng), ValidationError);
    }

    TEST_CASE("beta sampler moments") {
        std::mt19937_64 rng(9);
        double sum = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            const double b = sample_beta(2.0, 5.0, rng);
            REQUIRE(b > 0.0);
            REQUIRE(b < 1.0);
            sum += b;
        }
        // Mean 2/7, standard deviation about 0.16, so 5 standard errors is about 0.0056.
        CHECK(std::abs(sum / n - 2.0 / 7.0) < 0.0056);
    }
}
