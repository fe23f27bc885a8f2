// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <iostream>
#include <memory>
#include <random>

#include "commands.hpp"
#include "gem/error.hpp"
#include "gem/json_io.hpp"
#include "gem/protocol.hpp"
#include "gem/sampler.hpp"

namespace gem::cli {

namespace {

using nlohmann::json;

struct SampleArgs {
    std::string config;
    std::string provider = "synthetic";
    std::string out;
    std::string trace;
};

// Resolves paths in run.json relative to the file itself.
std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

VideoLatent make_target(const json& den, std::size_t frames, const Shape& frame_shape, LatentKind kind,
                        std::uint64_t seed, const std::filesystem::path& base) {
    if (den.contains("target")) {
        VideoLatent t(tensor_read(resolve(base, den.at("target").get<std::string>())), kind);
        require(t.num_frames() >= frames, "denoiser target has fewer frames than requested");
        require(t.frame_shape() == frame_shape, "denoiser target frame shape does not match the latent shape");
        return t.num_frames() == frames ? t : t.slice(0, frames);
    }
    // Without an explicit target, draw one from the seed so runs stay reproducible.
    std::mt19937_64 rng(den.value("target_seed", seed ^ 0x7a26e7ull));
    std::normal_distribution<float> normal(0.f, 1.f);
    VideoLatent t(frames, frame_shape[0], frame_shape[1], frame_shape[2], kind);
    for (auto& v : t.tensor().data())
        v = normal(rng);
    return t;
}

std::unique_ptr<sampler::Denoiser> make_denoiser(const json& den, const std::optional<VideoLatent>& target) {
    const auto kind = den.value("kind", std::string("perfect"));
    if (kind == "perfect")
        return std::make_unique<sampler::PerfectDenoiser>(*target);
    if (kind == "contraction")
        return std::make_unique<sampler::ContractionDenoiser>(*target, den.value("lambda", 0.5));
    if (kind == "gaussian")
        return std::make_unique<sampler::GaussianDenoiser>(den.value("mean", 0.0), den.value("std", 1.0));
    throw ValidationError("unknown denoiser kind '" + kind + "' (expected perfect, contraction or gaussian)");
}

sampler::ConditioningSet load_conditioning(const json& c, std::size_t frames, const Shape& frame_shape,
                                           const std::filesystem::path& base) {
    sampler::ConditioningSet cond;
    if (!c.is_object())
        return cond;
    if (c.contains("reference"))
        cond.reference_frame = tensor_read(resolve(base, c.at("reference").get<std::string>()));
    if (c.contains("trajectory"))
        cond.trajectory = io::read_trajectory(resolve(base, c.at("trajectory").get<std::string>()));
    if (c.contains("tokens")) {
        const auto grid = c.value("token_grid", std::vector<std::size_t>{frame_shape[1], frame_shape[2]});
        require(grid.size() == 2, "token_grid must be [h, w]");
        const auto maps = io::read_token_maps(resolve(base, c.at("tokens").get<std::string>()), grid[0], grid[1]);
        std::size_t dim = 0;
        for (const auto& m : maps)
            dim = std::max(dim, m.dim);
        cond.token_maps.resize(frames);
        for (std::size_t f = 0; f < frames; ++f) {
            cond.token_maps[f].frame_index = f;
            cond.token_maps[f].height = grid[0];
            cond.token_maps[f].width = grid[1];
            cond.token_maps[f].dim = dim;
        }
        for (const auto& m : maps) {
            require(m.frame_index < frames, "token map frame index beyond the generated length");
            cond.token_maps[m.frame_index] = m;
        }
    }
    if (c.contains("poses")) {
        const Tensor poses = tensor_read(resolve(base, c.at("poses").get<std::string>()));
        require(poses.rank() == 4 && poses.extent(0) == frames, "pose canvases must be [F, 3, H, W]");
        for (std::size_t f = 0; f < frames; ++f) {
            const auto s = poses.slab(f);
            cond.pose_canvases.emplace_back(Shape{poses.extent(1), poses.extent(2), poses.extent(3)},
                                            std::vector<float>(s.begin(), s.end()));
        }
    }
    return cond;
}

void run_sample(const SampleArgs& a) {
    const std::string provider = io::effective_provider_endpoint(a.provider);
    if (provider.rfind("bridge:", 0) == 0)
        throw ValidationError("sample run: the provider protocol has no denoise method; use --provider synthetic");
    require(provider == "synthetic", "sample run: unknown provider '" + provider + "'");

    const std::filesystem::path config_path(a.config);
    const json cfg = io::read_json_file(config_path);
    const auto base = config_path.parent_path();

    const std::size_t frames = cfg.at("frames").get<std::size_t>();
    schedule::ScheduleConfig sc;
    sc.window = cfg.value("window", sc.window);
    sc.stride = cfg.value("stride", sc.stride);
    sc.steps = cfg.value("steps", sc.steps);
    const auto ns = schedule::NoiseSchedule::karras(sc.steps, cfg.value("sigma_min", 0.002),
                                                    cfg.value("sigma_max", 80.0), cfg.value("rho", 7.0));
    const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});

    sampler::SampleOptions opts;
    const json latent = cfg.value("latent", json::object());
    opts.frame_shape = {latent.value("channels", std::size_t{4}), latent.value("height", std::size_t{8}),
                        latent.value("width", std::size_t{8})};
    opts.kind = latent_kind_from_string(latent.value("kind", std::string("rgb-latent")));
    opts.record_rows = cfg.value("record_rows", true);

    const json den = cfg.value("denoiser", json::object());
    const auto den_kind = den.value("kind", std::string("perfect"));
    std::optional<VideoLatent> target;
    if (den_kind != "gaussian")
        target = make_target(den, frames, opts.frame_shape, opts.kind, seed, base);
    const auto denoiser = make_denoiser(den, target);
    const auto cond = load_conditioning(cfg.value("conditioning", json::object()), frames, opts.frame_shape, base);

    std::mt19937_64 rng(seed);
    json trace;
    std::optional<VideoLatent> result;
    const auto mode = cfg.value("sampler", std::string("autoregressive"));
    if (mode == "autoregressive") {
        auto r = sampler::autoregressive_sample(frames, sc, ns, *denoiser, cond, rng, opts);
        trace = io::to_json(r.trace);
        result = std::move(r.frames);
    } else if (mode == "overlap") {
        auto r = sampler::overlap_sample(frames, sc.window, cfg.value("overlap", std::size_t{3}), ns, *denoiser, cond,
                                         rng, opts);
        trace = {{"chunks", r.chunks}, {"forward_passes", r.forward_passes}, {"rows_executed", r.forward_passes}};
        result = std::move(r.frames);
    } else {
        throw ValidationError("unknown sampler '" + mode + "' (expected autoregressive or overlap)");
    }
    trace["sampler"] = mode;
    trace["frames"] = frames;
    if (target) {
        const auto l2 = frame_l2(*result, *target);
        trace["frame_l2_to_target"] = l2;
        trace["max_l2_to_target"] = l2.empty() ? 0.0 : *std::max_element(l2.begin(), l2.end());
    }

    tensor_write(result->tensor(), a.out);
    if (!a.trace.empty())
        io::write_json_file(a.trace, trace);
    std::cout << "wrote " << frames << " frames, " << trace.at("forward_passes").get<std::size_t>()
              << " forward passes\n";
}

}  // namespace

void register_sample(CLI::App& app) {
    auto* sample = app.add_subcommand("sample", "Video sampling");
    sample->require_subcommand(1);
    auto args = std::make_shared<SampleArgs>();
    auto* run = sample->add_subcommand("run", "Run the autoregressive or overlap sampler with an analytic denoiser");
    run->add_option("--config", args->config, "run.json")->required()->check(CLI::ExistingFile);
    run->add_option("--provider", args->provider, "synthetic (bridge endpoints have no denoiser)");
    run->add_option("--out", args->out, "Output frames, GEMT [F, C, H, W]")->required();
    run->add_option("--trace", args->trace, "Output trace JSON");
    run->callback([args] { run_sample(*args); });
}

}  // namespace gem::cli
