// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>

namespace gem::cli {

void register_schedule(CLI::App& app);
void register_sample(CLI::App& app);
void register_control_prep(CLI::App& app);
void register_curate(CLI::App& app);
void register_metrics(CLI::App& app);
void register_traj(CLI::App& app);
void register_provider(CLI::App& app);

}  // namespace gem::cli
