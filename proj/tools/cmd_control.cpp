// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <iostream>

#include "commands.hpp"
#include "gem/control.hpp"
#include "gem/error.hpp"
#include "gem/json_io.hpp"

namespace gem::cli {

namespace {

struct ControlArgs {
    std::string features;
    std::string flows;
    std::size_t max_tokens = control::kDefaultMaxTokens;
    std::uint64_t seed = 0;
    std::size_t identities = 256;
    std::size_t keyframe_interval = 0;
    std::size_t patch_stride = control::kDefaultPatchStride;
    std::string out;
};

std::vector<std::filesystem::path> gemt_files(const std::filesystem::path& dir) {
    require(std::filesystem::is_directory(dir), dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".gemt")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

// Frame 0 (and every keyframe_interval-th frame after it) is masked from its own features and
// given fresh identities; the frames in between inherit tokens carried forward by the flow.
void run_control_prep(const ControlArgs& a) {
    const auto feature_files = gemt_files(a.features);
    require(!feature_files.empty(), "no .gemt feature maps in " + a.features);
    std::vector<std::filesystem::path> flow_files;
    if (!a.flows.empty())
        flow_files = gemt_files(a.flows);

    const control::FeatureMap first(tensor_read(feature_files.front()), a.patch_stride);
    const auto table = control::IdentityTable::random(a.identities, first.dim(), a.seed ^ 0x1d5eedull);
    std::mt19937_64 rng(a.seed);

    std::vector<nlohmann::json> lines;
    std::optional<control::SparseTokenMap> current;
    for (std::size_t f = 0; f < feature_files.size(); ++f) {
        const bool keyframe = f == 0 || (a.keyframe_interval > 0 && f % a.keyframe_interval == 0);
        if (keyframe) {
            const control::FeatureMap fm(tensor_read(feature_files[f]), a.patch_stride);
            auto masked = control::mask_tokens(fm, a.max_tokens, rng);
            masked.frame_index = f;
            current = control::assign_identities(masked, table, rng);
        } else {
            require(f - 1 < flow_files.size(), "missing flow from frame " + std::to_string(f - 1) + " to " +
                                                   std::to_string(f));
            const control::FlowField flow(tensor_read(flow_files[f - 1]));
            current = control::translate_tokens(*current, flow, f);
        }
        for (const auto& tok : current->tokens)
            lines.push_back(io::token_to_json(*current, tok));
    }
    io::write_json_lines(a.out, lines);
    std::cout << "wrote " << lines.size() << " tokens over " << feature_files.size() << " frames\n";
}

}  // namespace

void register_control_prep(CLI::App& app) {
    auto args = std::make_shared<ControlArgs>();
    auto* cmd = app.add_subcommand("control-prep", "Build sparse identity-tagged token maps from features and flow");
    cmd->add_option("--features", args->features, "Directory of [d, h, w] feature maps, one .gemt per frame")
        ->required();
    cmd->add_option("--flows", args->flows, "Directory of [2, H, W] flows, file i maps frame i to i + 1");
    cmd->add_option("--M", args->max_tokens, "Maximum tokens kept per keyframe");
    cmd->add_option("--seed", args->seed, "Random seed");
    cmd->add_option("--identities", args->identities, "Identity table size L");
    cmd->add_option("--keyframe-interval", args->keyframe_interval, "Re-mask every N frames (0 = first frame only)");
    cmd->add_option("--patch-stride", args->patch_stride, "Pixels per feature cell");
    cmd->add_option("--out", args->out, "Output tokens.jsonl")->required();
    cmd->callback([args] { run_control_prep(*args); });
}

}  // namespace gem::cli
