// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <thread>
#include <unistd.h>

#include "commands.hpp"
#include "gem/error.hpp"
#include "gem/json_io.hpp"
#include "gem/protocol.hpp"

namespace gem::cli {

namespace {

struct EchoArgs {
    std::string provider = "synthetic";
};

struct ServeArgs {
    std::string listen = "stdio";
    std::string config;
};

io::SyntheticConfig load_synthetic(const std::string& path) {
    return path.empty() ? io::SyntheticConfig{} : io::synthetic_config_from_json(io::read_json_file(path));
}

void run_echo(const EchoArgs& a) {
    const std::string endpoint = io::effective_provider_endpoint(a.provider);
    nlohmann::json summary;
    if (endpoint.rfind("bridge:", 0) == 0) {
        io::ProviderClient client(io::open_endpoint(endpoint.substr(7)));
        summary = io::provider_self_test(client);
    } else {
        require(endpoint == "synthetic" || endpoint.rfind("synthetic:", 0) == 0,
                "unknown provider '" + endpoint + "'");
        // Loop the synthetic providers through an in-process server so the wire path is exercised.
        io::SyntheticProviders providers(load_synthetic(endpoint == "synthetic" ? "" : endpoint.substr(10)));
        auto [client_end, server_end] = io::make_memory_channel_pair();
        std::thread server([&providers, ch = std::move(server_end)]() mutable { io::serve(providers, *ch); });
        {
            io::ProviderClient client(std::move(client_end));
            summary = io::provider_self_test(client);
        }
        server.join();
    }
    summary["endpoint"] = endpoint;
    summary["ok"] = true;
    std::cout << summary.dump(2) << '\n';
}

void run_serve(const ServeArgs& a) {
    io::SyntheticProviders providers(load_synthetic(a.config));
    if (a.listen == "stdio") {
        io::FdChannel channel(STDIN_FILENO, STDOUT_FILENO, false);
        io::serve(providers, channel);
        return;
    }
    require(a.listen.rfind("tcp:", 0) == 0, "--listen must be stdio or tcp:PORT");
    io::TcpListener listener(std::stoi(a.listen.substr(4)));
    std::cerr << "listening on 127.0.0.1:" << listener.port() << '\n';
    for (;;) {
        auto channel = listener.accept();
        io::serve(providers, *channel);
    }
}

}  // namespace

void register_provider(CLI::App& app) {
    auto echo_args = std::make_shared<EchoArgs>();
    auto* echo = app.add_subcommand("provider-echo", "Protocol self-test against a provider endpoint");
    echo->add_option("--provider", echo_args->provider, "synthetic[:config.json] or bridge:<endpoint>");
    echo->callback([echo_args] { run_echo(*echo_args); });

    auto serve_args = std::make_shared<ServeArgs>();
    auto* serve = app.add_subcommand("provider-serve", "Serve the synthetic providers over the wire protocol");
    serve->add_option("--listen", serve_args->listen, "stdio or tcp:PORT");
    serve->add_option("--config", serve_args->config, "Synthetic provider config JSON")->check(CLI::ExistingFile);
    serve->callback([serve_args] { run_serve(*serve_args); });
}

}  // namespace gem::cli
