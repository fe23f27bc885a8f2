// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "commands.hpp"
#include "gem/curation.hpp"
#include "gem/json_io.hpp"
#include "gem/protocol.hpp"

namespace gem::cli {

namespace {

struct CurateArgs {
    std::string manifest;
    std::string config;
    std::string provider = "synthetic";
    std::string report;
};

void run_curate(const CurateArgs& a) {
    const auto manifest = curation::read_manifest(a.manifest);
    const auto cfg = a.config.empty() ? curation::FilterConfig{}
                                      : curation::filter_config_from_json(io::read_json_file(a.config));
    cfg.validate();
    const auto providers = io::open_providers(a.provider);
    curation::GemtFrameSource frames;
    const auto report = curation::run_pipeline(manifest, cfg, *providers, frames);
    io::write_json_file(a.report, report.to_json());
    std::cout << report.kept().size() << " of " << report.total_clips << " clips kept";
    if (report.unscored_clips > 0)
        std::cout << " (" << report.unscored_clips << " unscored)";
    std::cout << '\n';
}

}  // namespace

void register_curate(CLI::App& app) {
    auto args = std::make_shared<CurateArgs>();
    auto* cmd = app.add_subcommand("curate", "Segment videos into clips and run the filter cascade");
    cmd->add_option("--manifest", args->manifest, "corpus.jsonl: {video_id, path, fps, frames} per line")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--config", args->config, "filters.json with threshold overrides")->check(CLI::ExistingFile);
    cmd->add_option("--provider", args->provider, "synthetic[:config.json] or bridge:<endpoint>");
    cmd->add_option("--report", args->report, "Output report.json")->required();
    cmd->callback([args] { run_curate(*args); });
}

}  // namespace gem::cli
