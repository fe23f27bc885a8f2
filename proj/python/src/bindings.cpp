// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <thread>

#include "gem/curation.hpp"
#include "gem/error.hpp"
#include "gem/json_io.hpp"
#include "gem/metrics.hpp"
#include "gem/piqe.hpp"
#include "gem/protocol.hpp"
#include "gem/sampler.hpp"
#include "gem/schedule.hpp"
#include "gem/tensor.hpp"
#include "gem/trajectory.hpp"

namespace py = pybind11;
using namespace gem;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const F32Array& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(shape, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<float> out(shape);
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

py::object to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

metrics::Trajectory to_trajectory(const F64Array& a) {
    if (a.ndim() != 2)
        throw ValidationError("trajectory must be a [N, dim] array");
    return metrics::Trajectory(static_cast<std::size_t>(a.shape(1)),
                               std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> trajectory_to_numpy(const metrics::Trajectory& t) {
    py::array_t<double> out({static_cast<py::ssize_t>(t.size()), static_cast<py::ssize_t>(t.dim())});
    std::copy(t.coords().begin(), t.coords().end(), out.mutable_data());
    return out;
}

std::vector<traj::PoseMatrix> to_poses(const F64Array& a) {
    if (a.ndim() != 3 || a.shape(1) != 4 || a.shape(2) != 4)
        throw ValidationError("poses must be a [N, 4, 4] array");
    std::vector<traj::PoseMatrix> poses;
    for (py::ssize_t n = 0; n < a.shape(0); ++n) {
        std::array<double, 16> v{};
        std::copy(a.data() + n * 16, a.data() + (n + 1) * 16, v.begin());
        poses.push_back(traj::pose_from_row_major(v));
    }
    return poses;
}

schedule::ScheduleConfig make_cfg(std::size_t window, std::size_t stride, std::size_t steps) {
    schedule::ScheduleConfig cfg;
    cfg.window = window;
    cfg.stride = stride;
    cfg.steps = steps;
    return cfg;
}

// Either a [F, C, H, W] target array (perfect denoiser) or a callable f(x, sigmas) -> clean estimate.
std::unique_ptr<sampler::Denoiser> make_denoiser(const py::object& denoiser) {
    if (py::isinstance<py::array>(denoiser))
        return std::make_unique<sampler::PerfectDenoiser>(VideoLatent(to_tensor(denoiser.cast<F32Array>())));
    if (!PyCallable_Check(denoiser.ptr()))
        throw ValidationError("denoiser must be a target array or a callable");
    auto fn = denoiser;
    return std::make_unique<sampler::FunctionDenoiser>(
        [fn](const VideoLatent& x, std::span<const double> sigmas, const sampler::ConditioningSet& cond) {
            py::list positions;
            for (auto p : cond.frame_positions)
                positions.append(p);
            py::object out = fn(to_numpy(x.tensor()), std::vector<double>(sigmas.begin(), sigmas.end()), positions);
            return VideoLatent(to_tensor(out.cast<F32Array>()), x.kind());
        });
}

sampler::SampleOptions make_options(const std::vector<std::size_t>& frame_shape) {
    if (frame_shape.size() != 3)
        throw ValidationError("frame_shape must be (C, H, W)");
    sampler::SampleOptions opts;
    opts.frame_shape = Shape(frame_shape.begin(), frame_shape.end());
    return opts;
}

metrics::KeypointSet to_keypoint_set(const py::object& o) {
    return io::keypoint_set_from_json(from_py(o));
}

std::vector<std::vector<metrics::KeypointSet>> to_images(const py::list& images) {
    std::vector<std::vector<metrics::KeypointSet>> out;
    for (const auto& img : images) {
        auto& people = out.emplace_back();
        for (const auto& p : img)
            people.push_back(to_keypoint_set(py::reinterpret_borrow<py::object>(p)));
    }
    return out;
}

py::dict tokens_to_py(const control::SparseTokenMap& map) {
    py::list tokens;
    for (const auto& t : map.tokens)
        tokens.append(to_py(io::token_to_json(map, t)));
    py::dict d;
    d["frame"] = map.frame_index;
    d["height"] = map.height;
    d["width"] = map.width;
    d["dim"] = map.dim;
    d["tokens"] = tokens;
    return d;
}

control::SparseTokenMap tokens_from_py(const py::dict& d) {
    control::SparseTokenMap map;
    map.frame_index = d["frame"].cast<std::size_t>();
    map.height = d["height"].cast<std::size_t>();
    map.width = d["width"].cast<std::size_t>();
    map.dim = d["dim"].cast<std::size_t>();
    if (d.contains("patch_stride"))
        map.patch_stride = d["patch_stride"].cast<std::size_t>();
    for (const auto& item : d["tokens"]) {
        const auto j = from_py(py::reinterpret_borrow<py::object>(item));
        control::Token t;
        t.y = j.at("y").get<std::size_t>();
        t.x = j.at("x").get<std::size_t>();
        t.vec = j.at("vec").get<std::vector<float>>();
        if (j.contains("id") && !j.at("id").is_null())
            t.id = j.at("id").get<std::size_t>();
        map.tokens.push_back(std::move(t));
    }
    map.validate();
    return map;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of the GEM world-model toolkit";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ProviderError>(m, "ProviderError", PyExc_RuntimeError);

    // Tensors and the GEMT container.
    m.def("encode_gemt", [](const F32Array& a) {
        const auto bytes = encode_gemt(to_tensor(a));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    });
    m.def("decode_gemt", [](const py::bytes& b) {
        const std::string s = b;
        return to_numpy(decode_gemt(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())));
    });
    m.def("tensor_write", [](const F32Array& a, const std::string& path) { tensor_write(to_tensor(a), path); });
    m.def("tensor_read", [](const std::string& path) { return to_numpy(tensor_read(path)); });

    // Schedules.
    m.def("karras_sigmas", [](std::size_t steps, double smin, double smax, double rho) {
        return schedule::NoiseSchedule::karras(steps, smin, smax, rho).sigmas();
    }, py::arg("steps"), py::arg("sigma_min") = 0.002, py::arg("sigma_max") = 80.0, py::arg("rho") = 7.0);
    m.def("noise_index", [](std::size_t row, std::size_t frame, std::size_t window, std::size_t stride,
                            std::size_t steps) {
        const auto cfg = make_cfg(window, stride, steps);
        cfg.validate();
        return schedule::noise_index(row, frame, cfg);
    }, py::arg("row"), py::arg("frame"), py::arg("window"), py::arg("stride"), py::arg("steps"));
    m.def("total_forward_passes", [](std::size_t frames, std::size_t window, std::size_t stride, std::size_t steps) {
        return schedule::total_forward_passes(frames, make_cfg(window, stride, steps));
    }, py::arg("frames"), py::arg("window") = 25, py::arg("stride") = 2, py::arg("steps") = 50);
    m.def("schedule_matrix", [](std::size_t frames, std::size_t window, std::size_t stride, std::size_t steps,
                                double smin, double smax) {
        const auto ns = schedule::NoiseSchedule::karras(steps, smin, smax);
        return schedule::schedule_matrix(frames, make_cfg(window, stride, steps), ns);
    }, py::arg("frames"), py::arg("window"), py::arg("stride"), py::arg("steps"), py::arg("sigma_min") = 0.002,
       py::arg("sigma_max") = 80.0);
    m.def("training_frame_sigmas", [](std::size_t frames, std::uint64_t seed, double jitter_std,
                                      std::optional<double> t_shift) {
        schedule::TrainingNoiseConfig cfg;
        cfg.frames = frames;
        cfg.jitter_std = jitter_std;
        cfg.fixed_t_shift = t_shift;
        std::mt19937_64 rng(seed);
        const auto r = schedule::training_frame_sigmas(cfg, schedule::LogLinearSigmaTimeMap(), rng);
        py::dict d;
        d["log_sigma"] = r.log_sigma;
        d["t_shift"] = r.t_shift;
        d["times"] = r.times;
        d["sigmas"] = r.sigmas;
        return d;
    }, py::arg("frames") = 25, py::arg("seed") = 0, py::arg("jitter_std") = -1.0, py::arg("t_shift") = py::none());

    // Samplers.
    m.def("autoregressive_sample", [](std::size_t frames, const py::object& denoiser, std::size_t window,
                                      std::size_t stride, std::size_t steps, double smin, double smax,
                                      std::uint64_t seed, std::vector<std::size_t> frame_shape) {
        const auto den = make_denoiser(denoiser);
        const auto ns = schedule::NoiseSchedule::karras(steps, smin, smax);
        std::mt19937_64 rng(seed);
        auto opts = make_options(frame_shape);
        opts.record_rows = false;
        const auto r = sampler::autoregressive_sample(frames, make_cfg(window, stride, steps), ns, *den, {}, rng, opts);
        return py::make_tuple(to_numpy(r.frames.tensor()), to_py(io::to_json(r.trace)));
    }, py::arg("frames"), py::arg("denoiser"), py::arg("window") = 25, py::arg("stride") = 2, py::arg("steps") = 50,
       py::arg("sigma_min") = 0.002, py::arg("sigma_max") = 80.0, py::arg("seed") = 0,
       py::arg("frame_shape") = std::vector<std::size_t>{4, 8, 8});
    m.def("overlap_sample", [](std::size_t frames, const py::object& denoiser, std::size_t window,
                               std::size_t overlap, std::size_t steps, double smin, double smax, std::uint64_t seed,
                               std::vector<std::size_t> frame_shape) {
        const auto den = make_denoiser(denoiser);
        const auto ns = schedule::NoiseSchedule::karras(steps, smin, smax);
        std::mt19937_64 rng(seed);
        const auto r = sampler::overlap_sample(frames, window, overlap, ns, *den, {}, rng, make_options(frame_shape));
        py::dict info;
        info["chunks"] = r.chunks;
        info["forward_passes"] = r.forward_passes;
        return py::make_tuple(to_numpy(r.frames.tensor()), info);
    }, py::arg("frames"), py::arg("denoiser"), py::arg("window") = 25, py::arg("overlap") = 3, py::arg("steps") = 50,
       py::arg("sigma_min") = 0.002, py::arg("sigma_max") = 80.0, py::arg("seed") = 0,
       py::arg("frame_shape") = std::vector<std::size_t>{4, 8, 8});

    // Control preparation.
    m.def("mask_tokens", [](const F32Array& features, std::size_t max_tokens, std::uint64_t seed,
                            std::size_t patch_stride) {
        std::mt19937_64 rng(seed);
        return tokens_to_py(control::mask_tokens(control::FeatureMap(to_tensor(features), patch_stride), max_tokens, rng));
    }, py::arg("features"), py::arg("max_tokens") = control::kDefaultMaxTokens, py::arg("seed") = 0,
       py::arg("patch_stride") = control::kDefaultPatchStride);
    m.def("assign_identities", [](const py::dict& map, std::size_t table_size, std::uint64_t table_seed,
                                  std::uint64_t seed) {
        const auto src = tokens_from_py(map);
        const auto table = control::IdentityTable::random(table_size, src.dim, table_seed);
        std::mt19937_64 rng(seed);
        return tokens_to_py(control::assign_identities(src, table, rng));
    }, py::arg("tokens"), py::arg("table_size") = 256, py::arg("table_seed") = 0, py::arg("seed") = 0);
    m.def("translate_tokens", [](const py::dict& map, const F32Array& flow, std::size_t target_frame) {
        return tokens_to_py(control::translate_tokens(tokens_from_py(map), control::FlowField(to_tensor(flow)),
                                                      target_frame));
    }, py::arg("tokens"), py::arg("flow"), py::arg("target_frame"));
    m.def("rasterize_skeleton", [](const std::vector<F64Array>& people, std::size_t height, std::size_t width) {
        std::vector<control::Skeleton> skeletons;
        for (const auto& p : people) {
            if (p.ndim() != 2 || p.shape(0) != 17 || p.shape(1) != 3)
                throw ValidationError("each person must be a [17, 3] array of (x, y, visibility)");
            control::Skeleton s{};
            for (std::size_t k = 0; k < 17; ++k)
                s[k] = {p.at(k, 0), p.at(k, 1), static_cast<int>(p.at(k, 2))};
            skeletons.push_back(s);
        }
        return to_numpy(control::rasterize_skeleton(skeletons, height, width));
    }, py::arg("people"), py::arg("height"), py::arg("width"));

    // Curation.
    m.def("segment_clips", [](std::size_t total, double fps) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& c : curation::segment_clips(total, fps))
            out.emplace_back(c.start_frame, c.end_frame);
        return out;
    }, py::arg("total_frames"), py::arg("fps"));
    m.def("piqe", [](const F32Array& image) {
        const auto r = curation::piqe(to_tensor(image));
        py::dict d;
        d["score"] = r.score;
        d["active_blocks"] = r.active_blocks;
        d["artifact_blocks"] = r.artifact_blocks;
        d["noise_blocks"] = r.noise_blocks;
        d["no_activity"] = r.no_activity;
        return d;
    }, py::arg("luminance"));
    m.def("motion_score", [](const F32Array& flow) { return curation::motion_score(control::FlowField(to_tensor(flow))); },
          py::arg("flow"));
    m.def("intra_clip_diversity", [](const F32Array& first, const F32Array& last, double tau) {
        return curation::intra_clip_diversity(control::FeatureMap(to_tensor(first)), control::FeatureMap(to_tensor(last)), tau);
    }, py::arg("first"), py::arg("last"), py::arg("tau") = 0.5);
    m.def("curate", [](const std::string& manifest, const py::object& config) {
        const auto cfg = config.is_none() ? curation::FilterConfig{} : curation::filter_config_from_json(from_py(config));
        cfg.validate();
        io::SyntheticProviders providers;
        curation::GemtFrameSource frames;
        return to_py(curation::run_pipeline(curation::read_manifest(manifest), cfg, providers, frames).to_json());
    }, py::arg("manifest"), py::arg("config") = py::none());

    // Metrics.
    m.def("ade", [](const F64Array& a, const F64Array& b) { return metrics::ade(to_trajectory(a), to_trajectory(b)); });
    m.def("com", [](const py::list& gen, const py::list& gt, const std::string& norm) {
        const auto track = [](const py::list& l) {
            metrics::BoxTrack t;
            for (const auto& b : l)
                t.push_back(b.is_none() ? std::nullopt
                                        : std::optional(io::box_from_json(from_py(py::reinterpret_borrow<py::object>(b)))));
            return t;
        };
        const auto r = metrics::com(track(gen), track(gt), norm == "l1" ? metrics::CenterNorm::L1 : metrics::CenterNorm::L2);
        py::dict d;
        d["com"] = r.value;
        d["frames_compared"] = r.frames_compared;
        d["frames_skipped"] = r.frames_skipped;
        return d;
    }, py::arg("generated"), py::arg("ground_truth"), py::arg("norm") = "l2");
    m.def("depth_metrics", [](const F32Array& pred, const F32Array& gt) {
        const auto r = metrics::depth_metrics(to_tensor(pred), to_tensor(gt));
        return py::make_tuple(r.abs_rel, r.delta);
    });
    m.def("oks", [](const py::object& pred, const py::object& gt) { return metrics::oks(to_keypoint_set(pred), to_keypoint_set(gt)); });
    m.def("keypoint_ap", [](const py::list& preds, const py::list& gts, std::optional<std::vector<double>> thresholds,
                            const std::string& area) {
        const auto r = metrics::keypoint_ap(to_images(preds), to_images(gts),
                                            thresholds ? *thresholds : metrics::coco_oks_thresholds(),
                                            area == "large" ? metrics::AreaRange::large() : metrics::AreaRange::all());
        py::dict d;
        d["ap"] = r.mean;
        d["per_threshold"] = r.per_threshold;
        d["thresholds"] = r.thresholds;
        return d;
    }, py::arg("predictions"), py::arg("ground_truth"), py::arg("thresholds") = py::none(), py::arg("area") = "all");

    // Trajectories.
    m.def("bev_trajectory", [](const F64Array& poses) { return trajectory_to_numpy(traj::bev_trajectory(to_poses(poses))); });
    m.def("ego_trajectory", [](const F64Array& poses) { return trajectory_to_numpy(traj::ego_trajectory(to_poses(poses))); });
    m.def("scale_compensate", [](const F64Array& est, const F64Array& gt) {
        const auto r = traj::scale_compensate(to_trajectory(est), to_trajectory(gt));
        return py::make_tuple(r.scale, trajectory_to_numpy(r.aligned), r.ade);
    });

    // Provider protocol.
    m.def("provider_self_test", [](const std::string& endpoint) {
        nlohmann::json summary;
        {
            py::gil_scoped_release release;
            if (endpoint.rfind("bridge:", 0) == 0) {
                io::ProviderClient client(io::open_endpoint(endpoint.substr(7)));
                summary = io::provider_self_test(client);
            } else {
                io::SyntheticProviders providers;
                auto [client_end, server_end] = io::make_memory_channel_pair();
                std::thread server([&providers, ch = std::move(server_end)]() mutable { io::serve(providers, *ch); });
                {
                    io::ProviderClient client(std::move(client_end));
                    summary = io::provider_self_test(client);
                }
                server.join();
            }
        }
        return to_py(summary);
    }, py::arg("endpoint") = "synthetic");
}
