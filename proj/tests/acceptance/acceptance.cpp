// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per top-level criterion. Every check compares the library
// against an oracle computed independently here (closed forms, brute force or Monte Carlo).

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "caching_providers.hpp"
#include "gem/control.hpp"
#include "gem/curation.hpp"
#include "gem/error.hpp"
#include "gem/json_io.hpp"
#include "gem/metrics.hpp"
#include "gem/protocol.hpp"
#include "gem/sampler.hpp"
#include "gem/schedule.hpp"
#include "gem/tensor.hpp"
#include "gem/trajectory.hpp"
#include "planted_corpus.hpp"
#include "reorder_server.hpp"

using namespace gem;

namespace {

/// Collects failed sub-checks for one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        ++m_count;
        if (!ok && m_failures.size() < 8)
            m_failures.push_back(what);
        m_failed += !ok;
    }
    bool ok() const { return m_failed == 0; }
    std::string summary() const {
        std::ostringstream os;
        os << m_count - m_failed << "/" << m_count << " checks";
        for (const auto& f : m_failures)
            os << "\n      - " << f;
        return os.str();
    }

private:
    std::size_t m_count = 0;
    std::size_t m_failed = 0;
    std::vector<std::string> m_failures;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VideoLatent random_video(std::size_t n, const Shape& frame, std::mt19937_64& rng) {
    std::normal_distribution<float> normal(0.f, 1.f);
    VideoLatent v(n, frame[0], frame[1], frame[2]);
    for (auto& x : v.tensor().data())
        x = normal(rng);
    return v;
}

double max_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

// ---------------------------------------------------------------------------------------------

std::string forward_pass_accounting(Check& c) {
    schedule::ScheduleConfig cfg{25, 2, 50};
    const auto ns = schedule::NoiseSchedule::karras(cfg.steps, 0.002, 80.0);
    const std::vector<std::pair<std::size_t, std::size_t>> table = {{25, 98}, {50, 148}, {150, 348}};
    std::mt19937_64 rng(11);
    std::ostringstream detail;
    double worst = 0.0;
    for (auto [frames, expected] : table) {
        const auto target = random_video(frames, {4, 8, 8}, rng);
        sampler::PerfectDenoiser den(target);
        sampler::SampleOptions opts;
        opts.record_rows = false;
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = sampler::autoregressive_sample(frames, cfg, ns, den, {}, rng, opts);
        const double secs = seconds_since(t0);
        worst = std::max(worst, secs);
        c.expect(r.trace.forward_passes == expected,
                 "F=" + std::to_string(frames) + ": " + std::to_string(r.trace.forward_passes) + " passes");
        c.expect(r.trace.rows_executed == r.trace.forward_passes, "rows executed differ from passes");
        c.expect(schedule::total_forward_passes(frames, cfg) == expected, "closed form disagrees");
        c.expect(secs < 1.0, "F=" + std::to_string(frames) + " took " + fmt(secs) + " s");
        detail << r.trace.forward_passes << (frames == 150 ? "" : "/");
    }
    return "passes " + detail.str() + ", slowest run " + fmt(worst) + " s";
}

std::string perfect_denoiser_convergence(Check& c) {
    std::mt19937_64 rng(23);
    const Shape frame{4, 8, 8};
    double worst = 0.0;
    std::size_t runs = 0;

    // Autoregressive: the default 25-frame window layout plus random valid small configurations.
    std::vector<std::pair<std::size_t, schedule::ScheduleConfig>> ar_cases = {
        {25, {25, 2, 50}}, {26, {25, 2, 50}}, {100, {25, 2, 50}}, {150, {25, 2, 50}}};
    std::uniform_int_distribution<std::size_t> w_dist(1, 10), s_dist(1, 4), f_dist(0, 140);
    while (ar_cases.size() < 24) {
        schedule::ScheduleConfig cfg{w_dist(rng), s_dist(rng), 0};
        std::uniform_int_distribution<std::size_t> t_dist((cfg.window - 1) * cfg.stride, cfg.window * cfg.stride);
        cfg.steps = std::max<std::size_t>(1, t_dist(rng));
        try {
            cfg.validate_for_sampling();
        } catch (const ValidationError&) {
            continue;
        }
        ar_cases.push_back({cfg.window + f_dist(rng) % (151 - cfg.window), cfg});
    }
    for (const auto& [frames, cfg] : ar_cases) {
        const auto target = random_video(frames, frame, rng);
        sampler::PerfectDenoiser den(target);
        const auto ns = schedule::NoiseSchedule::karras(cfg.steps, 0.002, 80.0);
        sampler::SampleOptions opts;
        opts.record_rows = false;
        const auto r = sampler::autoregressive_sample(frames, cfg, ns, den, {}, rng, opts);
        const double e = max_of(frame_l2(r.frames, target));
        worst = std::max(worst, e);
        c.expect(e <= 1e-6, "autoregressive F=" + std::to_string(frames) + " W=" + std::to_string(cfg.window) +
                                " error " + fmt(e));
        ++runs;
    }

    // Overlap baseline at every reachable length up to 150 for two overlaps.
    const auto ns = schedule::NoiseSchedule::karras(50, 0.002, 80.0);
    for (std::size_t overlap : {0u, 3u})
        for (std::size_t frames = 25; frames <= 150; frames += 25 - overlap) {
            const auto target = random_video(frames, frame, rng);
            sampler::PerfectDenoiser den(target);
            const auto r = sampler::overlap_sample(frames, 25, overlap, ns, den, {}, rng);
            const double e = max_of(frame_l2(r.frames, target));
            worst = std::max(worst, e);
            c.expect(e <= 1e-6, "overlap F=" + std::to_string(frames) + " error " + fmt(e));
            ++runs;
        }
    return std::to_string(runs) + " runs, worst per-frame L2 " + fmt(worst);
}

std::string schedule_staircase(Check& c) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> w_dist(1, 8), s_dist(1, 4), t_dist(1, 32);
    std::size_t configs = 0;
    while (configs < 1000) {
        schedule::ScheduleConfig cfg{w_dist(rng), s_dist(rng), t_dist(rng)};
        if ((cfg.window - 1) * cfg.stride > cfg.steps)
            continue;
        ++configs;
        const auto ns = schedule::NoiseSchedule::karras(cfg.steps, 0.002, 80.0);
        const long long last = static_cast<long long>(cfg.steps + (cfg.window - 1) * cfg.stride);
        std::vector<double> prev;
        for (long long m = 0; m <= last + 1; ++m) {
            const auto row = schedule::schedule_row(m, cfg, ns);
            for (std::size_t t = 0; t + 1 < row.size(); ++t)
                c.expect(row[t] <= row[t + 1], "row not non-decreasing in t");
            if (!prev.empty())
                for (std::size_t t = 0; t < row.size(); ++t) {
                    c.expect(row[t] <= prev[t], "frame regained noise");
                    // Adjacent rows differ by at most one schedule index per frame.
                    const auto j0 = schedule::noise_index(std::size_t(m - 1), t, cfg);
                    const auto j1 = schedule::noise_index(std::size_t(m), t, cfg);
                    c.expect(j1 == j0 || j1 == j0 + 1, "index jumped by more than one");
                }
            prev = row;
        }
        const auto first_row = schedule::schedule_row(0, cfg, ns);
        c.expect(std::all_of(first_row.begin(), first_row.end(), [&](double s) { return s == ns.max_sigma(); }),
                 "row 0 is not all sigma_0");
        const auto final_row = schedule::schedule_row(last, cfg, ns);
        c.expect(std::all_of(final_row.begin(), final_row.end(), [](double s) { return s == 0.0; }),
                 "last row is not all zero");
    }

    // W = 3, s = 1, T = 3: indices clamp(m - t, 0, 3) enumerated by hand.
    const std::vector<std::vector<std::size_t>> expected = {
        {0, 0, 0}, {1, 0, 0}, {2, 1, 0}, {3, 2, 1}, {3, 3, 2}, {3, 3, 3}};
    const schedule::ScheduleConfig fig{3, 1, 3};
    const auto ns = schedule::NoiseSchedule::karras(3, 0.002, 80.0);
    for (std::size_t m = 0; m < expected.size(); ++m) {
        const auto row = schedule::schedule_row(static_cast<long long>(m), fig, ns);
        for (std::size_t t = 0; t < 3; ++t) {
            c.expect(schedule::noise_index(m, t, fig) == expected[m][t], "3x3 index mismatch at row " + std::to_string(m));
            c.expect(row[t] == ns[expected[m][t]], "3x3 sigma mismatch at row " + std::to_string(m));
        }
    }
    return std::to_string(configs) + " random configs + 6-row 3x3 matrix";
}

std::string training_schedule(Check& c) {
    const schedule::LogLinearSigmaTimeMap map;
    std::size_t unclamped_pairs = 0;
    std::size_t draws = 0;
    for (std::size_t n : {2u, 5u, 14u, 25u}) {
        schedule::TrainingNoiseConfig cfg;
        cfg.frames = n;
        cfg.jitter_std = 0.0;
        const double spacing = 1.0 / double(n - 1);
        for (std::uint64_t seed = 0; seed < 500; ++seed) {
            std::mt19937_64 rng(seed);
            const auto r = schedule::training_frame_sigmas(cfg, map, rng);
            ++draws;
            std::vector<bool> inside(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double raw = r.t_intercept - (double(i) * spacing - r.t_shift);
                inside[i] = raw >= 0.0 && raw <= 1.0;
                if (inside[i])
                    c.expect(r.times[i] == raw, "unclamped time differs from the formula");
                else
                    c.expect(r.times[i] == std::clamp(raw, 0.0, 1.0) && r.clamped, "out-of-range time not clamped");
            }
            for (std::size_t i = 0; i + 1 < n; ++i) {
                c.expect(r.sigmas[i + 1] >= r.sigmas[i], "noise decreased along frames");
                if (inside[i] && inside[i + 1]) {
                    ++unclamped_pairs;
                    c.expect(std::abs((r.times[i] - r.times[i + 1]) - spacing) <= 1e-12, "spacing is not 1/(N-1)");
                    c.expect(r.sigmas[i + 1] > r.sigmas[i], "noise not strictly increasing");
                }
            }
        }
        // Pinning the intercept near 0.5 and the shift at 0.5 spreads the frames over the whole
        // time axis: an exact ladder from the clean end to the noisy end.
        cfg.fixed_t_shift = 0.5;
        cfg.p_mean = 0.5 * (std::log(map.sigma_min()) + std::log(map.sigma_max()));
        cfg.p_std = 1e-12;
        std::mt19937_64 rng(1);
        const auto r = schedule::training_frame_sigmas(cfg, map, rng);
        c.expect(std::abs(r.t_intercept - 0.5) < 1e-9, "geometric-mean sigma does not map to t = 0.5");
        for (std::size_t i = 0; i + 1 < n; ++i)
            c.expect(r.sigmas[i + 1] > r.sigmas[i] && std::abs(r.times[i] - r.times[i + 1] - spacing) < 1e-9,
                     "pinned ladder broken at N=" + std::to_string(n));
    }
    c.expect(unclamped_pairs > 0, "no unclamped pairs exercised");

    // Monte Carlo: mean of log sigma over 10^4 draws against p_mean.
    schedule::TrainingNoiseConfig cfg;
    std::mt19937_64 rng(2024);
    const std::size_t samples = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double ls = schedule::training_frame_sigmas(cfg, map, rng).log_sigma;
        sum += ls;
        sum_sq += ls * ls;
    }
    const double mean = sum / double(samples);
    const double var = (sum_sq - double(samples) * mean * mean) / double(samples - 1);
    const double se = std::sqrt(var / double(samples));
    const double z = (mean - cfg.p_mean) / se;
    c.expect(std::abs(z) <= 3.0, "log-sigma mean " + fmt(mean) + " is " + fmt(z) + " standard errors off");
    return std::to_string(draws) + " zero-jitter draws (" + std::to_string(unclamped_pairs) +
           " unclamped adjacent pairs), MC mean log sigma " + fmt(mean) + " (z = " + fmt(z) + ")";
}

// Brute-force keypoint AP for a single area range with no ignored ground truth: greedy matching
// per image in score order, then interpolated precision as the max precision at any recall >= r.
double brute_force_ap(const std::vector<std::vector<metrics::KeypointSet>>& preds,
                      const std::vector<std::vector<metrics::KeypointSet>>& gts, double thr) {
    struct Det {
        double score;
        std::size_t image, rank;
        bool tp;
    };
    std::vector<Det> dets;
    std::size_t positives = 0;
    for (std::size_t img = 0; img < gts.size(); ++img) {
        positives += gts[img].size();
        std::vector<std::size_t> order(preds[img].size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return preds[img][a].score > preds[img][b].score; });
        std::vector<bool> used(gts[img].size(), false);
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            double best = -1.0;
            std::size_t best_g = 0;
            for (std::size_t g = 0; g < gts[img].size(); ++g) {
                if (used[g])
                    continue;
                const double o = metrics::oks(preds[img][order[rank]], gts[img][g]);
                if (o >= thr && o > best) {
                    best = o;
                    best_g = g;
                }
            }
            if (best >= 0.0)
                used[best_g] = true;
            dets.push_back({preds[img][order[rank]].score, img, rank, best >= 0.0});
        }
    }
    if (positives == 0)
        return 0.0;
    std::stable_sort(dets.begin(), dets.end(), [](const Det& a, const Det& b) {
        return a.score != b.score ? a.score > b.score : (a.image != b.image ? a.image < b.image : a.rank < b.rank);
    });
    std::vector<double> prec, rec;
    double tp = 0;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        tp += dets[i].tp;
        prec.push_back(tp / double(i + 1));
        rec.push_back(tp / double(positives));
    }
    double total = 0.0;
    for (int r = 0; r <= 100; ++r) {
        double p = 0.0;
        for (std::size_t i = 0; i < prec.size(); ++i)
            if (rec[i] >= double(r) / 100.0 - 1e-12)
                p = std::max(p, prec[i]);
        total += p;
    }
    return total / 101.0;
}

metrics::KeypointSet random_person(std::mt19937_64& rng, double area) {
    std::uniform_real_distribution<double> pos(0.0, 200.0);
    std::uniform_int_distribution<int> vis(0, 2);
    metrics::KeypointSet p;
    for (auto& k : p.keypoints)
        k = {pos(rng), pos(rng), vis(rng)};
    p.keypoints[0].visibility = 2;
    p.area = area;
    return p;
}

std::string metric_oracles(Check& c) {
    using metrics::Trajectory;
    // ADE.
    const Trajectory a(2, {0, 0, 1, 2, 5, -1});
    Trajectory b(2);
    for (std::size_t i = 0; i < a.size(); ++i)
        b.push_back(std::vector<double>{a.point(i)[0] + 3.0, a.point(i)[1] + 4.0});
    c.expect(metrics::ade(a, a) == 0.0, "ade(a, a) != 0");
    c.expect(std::abs(metrics::ade(a, b) - 5.0) < 1e-12, "ade offset (3,4) != 5");
    c.expect(std::abs(metrics::ade(Trajectory(2, {0, 0, 0, 0}), Trajectory(2, {0, 0, 3, 4})) - 2.5) < 1e-12,
             "ade two-point mean != 2.5");
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t dim = 2 + trial % 2, n = 1 + trial;
        std::vector<double> p(n * dim), q(n * dim);
        for (auto& v : p) v = normal(rng);
        for (auto& v : q) v = normal(rng);
        double oracle = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k)
                d2 += (p[i * dim + k] - q[i * dim + k]) * (p[i * dim + k] - q[i * dim + k]);
            oracle += std::sqrt(d2) / double(n);
        }
        const double got = metrics::ade(Trajectory(dim, p), Trajectory(dim, q));
        c.expect(std::abs(got - oracle) <= 1e-12 * (1 + oracle), "ade differs from the loop oracle");
        c.expect(got == metrics::ade(Trajectory(dim, q), Trajectory(dim, p)), "ade not symmetric");
    }

    // COM.
    metrics::BoxTrack gt, gen, shifted;
    for (int f = 0; f < 10; ++f) {
        const metrics::Box box{double(f), 10.0, double(f) + 20.0, 40.0};
        gt.push_back(box);
        gen.push_back(f % 2 == 0 ? std::optional(box) : std::nullopt);
        shifted.push_back(metrics::Box{box.x_min + 3, box.y_min + 4, box.x_max + 3, box.y_max + 4});
    }
    c.expect(metrics::com(gt, gt).value == 0.0, "com identical != 0");
    c.expect(std::abs(metrics::com(shifted, gt).value - 5.0) < 1e-12, "com offset (3,4) != 5");
    const auto partial = metrics::com(gen, gt);
    c.expect(partial.frames_compared == 5 && partial.frames_skipped == 5 && partial.value == 0.0,
             "com with absent frames");
    // Track selection: the 400-area vehicle wins and a lost frame is recorded then re-associated.
    std::vector<std::vector<metrics::Detection>> dets(4);
    for (int f = 0; f < 4; ++f) {
        dets[f].push_back({"car", {0, 0, 10, 10}, 0.9});
        if (f != 2)
            dets[f].push_back({"truck", {50, 50, 70, 70}, 0.8});
        dets[f].push_back({"person", {100, 100, 200, 200}, 0.99});
    }
    const auto track = metrics::select_largest_vehicle(dets);
    c.expect(track.size() == 4 && track[0] && track[0]->x_min == 50 && !track[2] && track[3] && track[3]->x_min == 50,
             "largest-vehicle tracking");

    // Depth.
    const Tensor ten({4, 4}, 10.0f), eight({4, 4}, 8.0f);
    const auto same = metrics::depth_metrics(ten, ten);
    c.expect(same.abs_rel == 0.0 && same.delta == 1.0, "depth identical");
    const auto boundary = metrics::depth_metrics(eight, ten);
    c.expect(std::abs(boundary.abs_rel - 0.2) < 1e-12 && boundary.delta == 0.0, "depth ratio exactly 1.25");
    Tensor half = ten;
    for (std::size_t i = 0; i < 8; ++i)
        half[i] = 20.0f;
    const auto h = metrics::depth_metrics(half, ten);
    c.expect(std::abs(h.abs_rel - 0.5) < 1e-12 && h.delta == 0.5, "depth half exact half ratio 2");
    std::uniform_real_distribution<double> depth(0.5, 30.0);
    for (int trial = 0; trial < 30; ++trial) {
        Tensor p({8, 8}), g({8, 8});
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = static_cast<float>(depth(rng));
            g[i] = i % 7 == 0 ? 0.0f : static_cast<float>(depth(rng));
        }
        double rel = 0.0, good = 0.0, valid = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!(g[i] > 0 && p[i] > 0))
                continue;
            valid += 1;
            rel += std::abs(double(p[i]) - g[i]) / g[i];
            good += std::max(double(p[i]) / g[i], double(g[i]) / p[i]) < 1.25;
        }
        const auto r = metrics::depth_metrics(p, g);
        c.expect(std::abs(r.abs_rel - rel / valid) < 1e-12 && r.delta == good / valid, "depth loop oracle");
        c.expect(metrics::depth_metrics(g, p).delta == r.delta, "delta not symmetric");
    }

    // Keypoint AP.
    metrics::KeypointSet person = random_person(rng, 5000.0);
    for (auto& k : person.keypoints)
        k.visibility = 2;
    const auto thresholds = metrics::coco_oks_thresholds();
    c.expect(metrics::keypoint_ap({{person}}, {{person}}).mean == 1.0, "AP of exact predictions");
    c.expect(metrics::keypoint_ap({{}}, {{person}}).mean == 0.0, "AP with no predictions");
    // Displace every keypoint so that each Gaussian term, and so the OKS, equals the target value.
    for (double target : {0.72, 0.7 + 1e-9, 0.75 - 1e-9}) {
        metrics::KeypointSet pred = person;
        const auto& sig = metrics::coco_keypoint_sigmas();
        for (std::size_t i = 0; i < 17; ++i) {
            const double k = 2.0 * sig[i];
            pred.keypoints[i].x += std::sqrt(-2.0 * k * k * person.area * std::log(target));
        }
        const double o = metrics::oks(pred, person);
        c.expect(std::abs(o - target) < 1e-9, "constructed OKS " + fmt(o));
        const auto ap = metrics::keypoint_ap({{pred}}, {{person}});
        double counted = 0;
        for (double t : thresholds)
            counted += o >= t;
        c.expect(std::abs(ap.mean - 0.5) < 1e-12 && counted == 5, "AP at OKS " + fmt(o) + " = " + fmt(ap.mean));
    }
    // Randomized scenes against the brute-force oracle.
    std::uniform_real_distribution<double> jitter(-6.0, 6.0), score(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::vector<metrics::KeypointSet>> preds(3), gts(3);
        for (std::size_t img = 0; img < 3; ++img) {
            const std::size_t n = (trial + img) % 4;
            for (std::size_t g = 0; g < n; ++g) {
                auto p = random_person(rng, 2000.0 + 3000.0 * score(rng));
                gts[img].push_back(p);
                if (score(rng) < 0.8) {
                    auto q = p;
                    for (auto& k : q.keypoints) {
                        k.x += jitter(rng);
                        k.y += jitter(rng);
                    }
                    q.score = score(rng);
                    preds[img].push_back(q);
                }
            }
            if (score(rng) < 0.5) {
                auto fp = random_person(rng, 3000.0);
                fp.score = score(rng);
                preds[img].push_back(fp);
            }
        }
        const auto r = metrics::keypoint_ap(preds, gts, thresholds);
        for (std::size_t t = 0; t < thresholds.size(); ++t)
            c.expect(std::abs(r.per_threshold[t] - brute_force_ap(preds, gts, thresholds[t])) < 1e-12,
                     "AP differs from brute force at trial " + std::to_string(trial));
    }
    return "ade/com/depth/AP examples + 50 ade, 30 depth, 60 AP randomized oracles";
}

double ade_at(double s, const metrics::Trajectory& est, const metrics::Trajectory& gt) {
    return metrics::ade(est.scaled(s), gt);
}

std::string scale_optimality(Check& c) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> len(5, 40);
    double worst_gap = 0.0, worst_excess = 0.0;
    for (int pair = 0; pair < 100; ++pair) {
        const std::size_t n = len(rng);
        std::vector<double> g(2 * n), e(2 * n);
        for (std::size_t i = 0; i < 2 * n; ++i) {
            g[i] = 5.0 * normal(rng);
            e[i] = 0.7 * g[i] + 0.05 * normal(rng);
        }
        const metrics::Trajectory gt(2, g), est(2, e);
        const auto r = traj::scale_compensate(est, gt);

        // Coarse grid over [0.1, 10] at 1e-4, then a fine grid at 1e-8 around the coarse winner.
        double best_s = 0.1, best = ade_at(0.1, est, gt);
        for (long k = 1; k <= 99000; ++k) {
            const double s = 0.1 + 1e-4 * double(k);
            const double v = ade_at(s, est, gt);
            if (v < best) {
                best = v;
                best_s = s;
            }
        }
        const double coarse_best = best;
        const double lo = best_s - 1.5e-4;
        for (long k = 0; k <= 30000; ++k) {
            const double s = lo + 1e-8 * double(k);
            const double v = ade_at(s, est, gt);
            if (v < best) {
                best = v;
                best_s = s;
            }
        }
        worst_gap = std::max(worst_gap, std::abs(r.scale - best_s));
        worst_excess = std::max(worst_excess, r.ade - best);
        c.expect(std::abs(r.scale - best_s) <= 1e-6,
                 "pair " + std::to_string(pair) + ": s* " + fmt(r.scale) + " vs grid " + fmt(best_s));
        c.expect(r.ade <= coarse_best + 1e-12 && r.ade <= best + 1e-12, "s* beaten by a grid point");
        c.expect(std::abs(r.ade - ade_at(r.scale, est, gt)) < 1e-12, "reported ADE inconsistent");
    }
    return "100 pairs, max |s* - grid argmin| " + fmt(worst_gap) + ", max ADE excess " + fmt(worst_excess);
}

std::string curation_pipeline(Check& c) {
    // segment_clips arithmetic.
    const auto four = curation::segment_clips(100, 10.0);
    c.expect(four.size() == 4 && four.back().start_frame == 75 && four.back().end_frame == 100, "100 @ 10 fps");
    c.expect(curation::segment_clips(20, 10.0).empty(), "20 @ 10 fps");
    c.expect(curation::segment_clips(26, 10.0).size() == 1, "26 @ 10 fps");
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> total(0, 5000);
    std::uniform_real_distribution<double> fps(1.0, 60.0);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = total(rng);
        const double f = fps(rng);
        const auto span = static_cast<std::size_t>(std::llround(2.5 * f));
        const auto clips = curation::segment_clips(n, f);
        c.expect(clips.size() == n / span, "segment count");
        for (std::size_t k = 0; k < clips.size(); ++k)
            c.expect(clips[k].start_frame == k * span && clips[k].end_frame == (k + 1) * span, "segment span");
    }

    // Planted corpus with the built-in synthetic providers.
    io::SyntheticProviders synthetic;
    testing::CachingProviders providers(synthetic);
    testing::PlantedCorpus corpus(synthetic);
    testing::CachingFrameSource frames(corpus.frames());
    const auto report = curation::run_pipeline(corpus.manifest(), {}, providers, frames);
    const auto expected = corpus.expected_survivors();
    const double total_clips = double(report.total_clips);
    std::ostringstream pct;
    c.expect(report.total_clips == 200 && report.scored_clips == 200, "corpus size");
    for (std::size_t k = 0; k < 5; ++k) {
        const auto& s = report.stages[k];
        c.expect(s.kept == expected[k], std::string(curation::stage_name(s.stage)) + " kept " + std::to_string(s.kept) +
                                            " expected " + std::to_string(expected[k]));
        c.expect(s.percent == 100.0 * double(expected[k]) / total_clips, "stage percent");
        pct << (k ? "/" : "") << s.percent;
    }
    for (std::size_t i = 0; i < report.clips.size(); ++i) {
        const auto plant = corpus.plant(i);
        const auto& clip = report.clips[i];
        const bool dropped = clip.status == curation::ClipStatus::Dropped;
        c.expect(dropped == (plant != testing::Plant::Pass), "clip " + std::to_string(i) + " verdict");
        if (dropped)
            c.expect(static_cast<int>(*clip.dropped_at) + 1 == static_cast<int>(plant),
                     "clip " + std::to_string(i) + " dropped at the wrong stage");
    }

    // Threshold sweeps: loosening one scalar threshold never turns that filter's keep into a drop,
    // and with the greedy cross-clip stage off the overall kept set can only grow.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto kept_set = [](const curation::CurationReport& r) {
        std::set<std::size_t> s;
        for (std::size_t i = 0; i < r.clips.size(); ++i)
            if (r.clips[i].status == curation::ClipStatus::Kept)
                s.insert(i);
        return s;
    };
    for (int sweep = 0; sweep < 50; ++sweep) {
        curation::FilterConfig tight;
        tight.aesthetic_min = 10.0 * u(rng);
        tight.piqe_max = 30.0 + 70.0 * u(rng);
        tight.intra_min = 0.2 * u(rng);
        tight.motion_min = 0.08 * u(rng);
        tight.cross_max = 0.5 + 0.6 * u(rng);
        const auto stage = curation::kStageOrder[static_cast<std::size_t>(sweep) % 4];
        curation::FilterConfig loose = tight;
        switch (stage) {
        case curation::Stage::Aesthetic: loose.aesthetic_min -= 5.0 * u(rng); break;
        case curation::Stage::Piqe: loose.piqe_max += 40.0 * u(rng); break;
        case curation::Stage::IntraDiversity: loose.intra_min -= 0.1 * u(rng); break;
        default: loose.motion_min -= 0.05 * u(rng); break;
        }
        const auto a = curation::run_pipeline(corpus.manifest(), tight, providers, frames);
        const auto b = curation::run_pipeline(corpus.manifest(), loose, providers, frames);
        const auto si = static_cast<std::size_t>(stage);
        for (std::size_t i = 0; i < a.clips.size(); ++i)
            if (a.clips[i].verdicts[si] == true)
                c.expect(b.clips[i].verdicts[si] == true, "loosened filter dropped a kept clip");
        for (std::size_t k = 0; k + 1 < 5; ++k)
            c.expect(a.stages[k + 1].kept <= a.stages[k].kept, "retention increased along the cascade");

        tight.enabled[static_cast<std::size_t>(curation::Stage::CrossSimilarity)] = false;
        loose.enabled = tight.enabled;
        const auto ka = kept_set(curation::run_pipeline(corpus.manifest(), tight, providers, frames));
        const auto kb = kept_set(curation::run_pipeline(corpus.manifest(), loose, providers, frames));
        c.expect(std::includes(kb.begin(), kb.end(), ka.begin(), ka.end()), "kept set shrank when loosening");
    }
    return "200 clips, stage retention " + pct.str() + " %, 50 sweeps, 500 segment cases";
}

// Upper tail of the chi-square distribution with 4 degrees of freedom.
double chi2_sf_4(double x) {
    return std::exp(-x / 2.0) * (1.0 + x / 2.0);
}

std::string control_prep(Check& c) {
    std::mt19937_64 rng(4);
    std::normal_distribution<float> normal(0.f, 1.f);
    Tensor grid({8, 6, 6});
    for (auto& v : grid.data())
        v = normal(rng);
    const control::FeatureMap fm(grid, 16);

    // Uniformity of m over {0..4}.
    std::array<double, 5> counts{};
    const std::size_t draws = 10000;
    for (std::size_t k = 0; k < draws; ++k) {
        const auto map = control::mask_tokens(fm, 4, rng);
        c.expect(map.tokens.size() <= 4, "more than M tokens");
        std::set<std::pair<std::size_t, std::size_t>> cells;
        for (const auto& t : map.tokens)
            cells.emplace(t.y, t.x);
        c.expect(cells.size() == map.tokens.size(), "duplicate cells");
        counts[map.tokens.size()] += 1;
    }
    double chi2 = 0.0;
    for (double n : counts)
        chi2 += (n - draws / 5.0) * (n - draws / 5.0) / (draws / 5.0);
    const double p = chi2_sf_4(chi2);
    c.expect(p > 0.01, "chi-square p = " + fmt(p));

    // Identity under zero flow; distinct identities per map.
    const auto table = control::IdentityTable::random(64, 8, 3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto tagged = control::assign_identities(control::mask_tokens(fm, 32, rng), table, rng);
        std::set<std::size_t> ids;
        for (const auto& t : tagged.tokens)
            ids.insert(*t.id);
        c.expect(ids.size() == tagged.tokens.size(), "identity reused within a map");
        const auto moved = control::translate_tokens(tagged, control::FlowField::constant(96, 96, 0.f, 0.f), 1);
        c.expect(moved.tokens.size() == tagged.tokens.size(), "zero flow changed the token count");
        for (std::size_t i = 0; i < std::min(moved.tokens.size(), tagged.tokens.size()); ++i)
            c.expect(moved.tokens[i].y == tagged.tokens[i].y && moved.tokens[i].x == tagged.tokens[i].x &&
                         moved.tokens[i].id == tagged.tokens[i].id && moved.tokens[i].vec == tagged.tokens[i].vec,
                     "zero flow moved a token");

        // Stride-sized flow to the right: one cell over, rightmost column dropped.
        const auto shifted = control::translate_tokens(tagged, control::FlowField::constant(96, 96, 16.f, 0.f), 1);
        std::map<std::size_t, std::pair<std::size_t, std::size_t>> by_id;
        for (const auto& t : shifted.tokens)
            by_id[*t.id] = {t.y, t.x};
        std::size_t survivors = 0;
        for (const auto& t : tagged.tokens) {
            const bool stays = t.x + 1 < fm.width();
            survivors += stays;
            const auto it = by_id.find(*t.id);
            c.expect(stays == (it != by_id.end()), "one-cell shift kept/dropped the wrong token");
            if (stays && it != by_id.end())
                c.expect(it->second == std::make_pair(t.y, t.x + 1), "token not moved exactly one cell right");
        }
        c.expect(shifted.tokens.size() == survivors, "one-cell shift token count");
    }
    return "10^4 draws, chi-square " + fmt(chi2) + " (p = " + fmt(p) + "), 200 translate trials";
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

std::string format_and_protocol(Check& c) {
    // GEMT round trip over random shapes and arbitrary bit patterns (NaN payloads, infinities, denormals).
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<std::size_t> rank(0, 5), extent(0, 6);
    std::uniform_int_distribution<std::uint32_t> bits;
    const auto dir = std::filesystem::temp_directory_path() / ("gem_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    for (int trial = 0; trial < 500; ++trial) {
        Shape shape(rank(rng));
        for (auto& e : shape)
            e = extent(rng);
        Tensor t(shape);
        for (auto& v : t.data())
            v = std::bit_cast<float>(bits(rng));
        const auto bytes = encode_gemt(t);
        c.expect(bit_equal(decode_gemt(bytes), t), "in-memory round trip");
        if (trial % 25 == 0) {
            const auto path = dir / ("t" + std::to_string(trial) + ".gemt");
            tensor_write(t, path);
            c.expect(bit_equal(tensor_read(path), t), "file round trip");
        }
    }

    // Protocol fuzz: 1000 interleavings, each a batch of pipelined requests answered in shuffled order
    // and collected by the client in its own random order.
    const auto fixtures = dir / "fixtures.json";
    {
        std::ofstream f(fixtures);
        f << R"({"detections": {"v": [[{"label": "car", "box": [0, 0, 10, 10], "score": 0.9}]]},)"
          << R"( "pose": {"v": [[]]}})";
    }
    io::SyntheticConfig cfg;
    cfg.fixtures = fixtures;
    io::SyntheticProviders providers(cfg);

    const std::size_t interleavings = 1000;
    std::uniform_int_distribution<std::size_t> batch(1, 6);
    std::vector<std::size_t> batches(interleavings);
    for (auto& b : batches)
        b = batch(rng);
    auto [client_end, server_end] = io::make_memory_channel_pair();
    testing::ReorderingServer server(providers, std::move(server_end), batches, 17);

    std::size_t requests = 0, out_of_order = 0;
    std::size_t orphans = 0, malformed = 0;
    {
        io::ProviderClient client(std::move(client_end), std::chrono::milliseconds(20000));
        const std::vector<std::string> methods = {"features", "flow", "depth", "aesthetic", "detections", "pose",
                                                  "segment"};
        std::uniform_int_distribution<std::size_t> pick(0, methods.size() - 1), side(1, 3);
        for (std::size_t b : batches) {
            std::vector<std::pair<std::int64_t, std::string>> sent;
            for (std::size_t k = 0; k < b; ++k) {
                const auto& m = methods[pick(rng)];
                const std::size_t s = 16 * side(rng);
                Tensor img({s, s});
                for (auto& v : img.data())
                    v = float(bits(rng) % 1000) / 1000.f;
                nlohmann::json payload = {{"image", io::inline_tensor_ref(img)}};
                if (m == "flow")
                    payload = {{"source", io::inline_tensor_ref(img)}, {"target", io::inline_tensor_ref(img)}};
                sent.emplace_back(client.send(m, payload, {{"video", "v"}, {"frame", 0}}), m);
            }
            requests += b;
            std::vector<std::size_t> order(sent.size());
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            out_of_order += !std::is_sorted(order.begin(), order.end());
            for (auto i : order) {
                const auto& [id, method] = sent[i];
                const auto r = client.wait(id);
                c.expect(r.id == id, "response id mismatch");
                if (method == "segment") {
                    c.expect(!r.ok && r.error == "unknown method", "unknown method not rejected");
                    continue;
                }
                c.expect(r.ok, method + " failed: " + r.error);
                const std::map<std::string, std::string> key = {{"features", "features"}, {"flow", "flow"},
                                                                 {"depth", "depth"},       {"aesthetic", "score"},
                                                                 {"detections", "detections"}, {"pose", "people"}};
                c.expect(r.result.contains(key.at(method)), method + " response has the wrong shape");
            }
            c.expect(client.in_flight() == 0, "requests left in flight");
        }
        orphans = client.orphaned_responses();
        malformed = client.malformed_responses();
    }
    server.join();
    c.expect(orphans == 0, std::to_string(orphans) + " orphaned responses");
    c.expect(malformed == 0, std::to_string(malformed) + " malformed responses");

    // Malformed line handling is part of the same conformance surface.
    const auto bad = io::handle_request_line(providers, "{not json");
    c.expect(bad.id == -1 && !bad.ok, "malformed JSON not answered with id -1");
    std::filesystem::remove_all(dir);
    return "500 GEMT round trips, " + std::to_string(interleavings) + " interleavings / " + std::to_string(requests) +
           " requests (" + std::to_string(out_of_order) + " collected out of order), " + std::to_string(orphans) +
           " orphans";
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<std::string(Check&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"forward-pass accounting (98/148/348)", forward_pass_accounting},
        {"perfect-denoiser convergence", perfect_denoiser_convergence},
        {"schedule staircase", schedule_staircase},
        {"training noise schedule", training_schedule},
        {"metric oracles", metric_oracles},
        {"scale compensation optimality", scale_optimality},
        {"curation pipeline", curation_pipeline},
        {"control prep", control_prep},
        {"format and protocol", format_and_protocol},
    };
    std::size_t failed = 0;
    for (const auto& crit : criteria) {
        Check check;
        std::string detail;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            detail = crit.run(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("threw: ") + e.what());
        }
        const bool ok = check.ok();
        failed += !ok;
        std::cout << (ok ? "PASS " : "FAIL ") << crit.name << " :: " << detail << " [" << check.summary() << ", "
                  << fmt(seconds_since(t0)) << " s]\n";
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
