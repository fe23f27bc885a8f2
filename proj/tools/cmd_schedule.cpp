// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iomanip>
#include <iostream>

#include "commands.hpp"
#include "gem/error.hpp"
#include "gem/schedule.hpp"

namespace gem::cli {

namespace {

struct DumpArgs {
    std::size_t frames = 25;
    schedule::ScheduleConfig cfg;
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
    std::string out;
};

void run_dump(const DumpArgs& a) {
    a.cfg.validate();
    const auto ns = schedule::NoiseSchedule::karras(a.cfg.steps, a.sigma_min, a.sigma_max, a.rho);
    const auto matrix = schedule::schedule_matrix(a.frames, a.cfg, ns);

    std::ofstream file;
    if (!a.out.empty() && a.out != "-") {
        file.open(a.out);
        require(file.good(), "cannot write " + a.out);
    }
    std::ostream& os = file.is_open() ? file : std::cout;
    os << "row";
    for (std::size_t f = 0; f < a.frames; ++f)
        os << ",f" << f;
    os << '\n' << std::setprecision(17);
    for (std::size_t m = 0; m < matrix.size(); ++m) {
        os << m;
        for (double s : matrix[m])
            os << ',' << s;
        os << '\n';
    }
}

}  // namespace

void register_schedule(CLI::App& app) {
    auto* sched = app.add_subcommand("schedule", "Noise schedule utilities");
    sched->require_subcommand(1);
    auto args = std::make_shared<DumpArgs>();
    auto* dump = sched->add_subcommand("dump", "Write the per-frame scheduling matrix (rows x frames) as CSV");
    dump->add_option("--frames", args->frames, "Number of frames F")->check(CLI::PositiveNumber);
    dump->add_option("--window", args->cfg.window, "Window size W")->check(CLI::PositiveNumber);
    dump->add_option("--stride", args->cfg.stride, "Stride s")->check(CLI::PositiveNumber);
    dump->add_option("--steps", args->cfg.steps, "Denoising steps T")->check(CLI::PositiveNumber);
    dump->add_option("--sigma-min", args->sigma_min, "Smallest nonzero sigma");
    dump->add_option("--sigma-max", args->sigma_max, "Largest sigma");
    dump->add_option("--rho", args->rho, "Ramp exponent");
    dump->add_option("--out", args->out, "Output CSV path ('-' for stdout)");
    dump->callback([args] { run_dump(*args); });
}

}  // namespace gem::cli
