// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

// `gem` umbrella command. Exit status: 0 success, 1 invalid input, 2 provider failure.

#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "commands.hpp"
#include "gem/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"GEM world-model toolkit: schedules, sampling, control prep, curation and metrics"};
    app.require_subcommand(1);
    gem::cli::register_schedule(app);
    gem::cli::register_sample(app);
    gem::cli::register_control_prep(app);
    gem::cli::register_curate(app);
    gem::cli::register_metrics(app);
    gem::cli::register_traj(app);
    gem::cli::register_provider(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const gem::ProviderError& e) {
        std::cerr << "gem: provider error: " << e.what() << '\n';
        return 2;
    } catch (const gem::ValidationError& e) {
        std::cerr << "gem: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "gem: bad JSON input: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "gem: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "gem: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
