// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "gem/channel.hpp"
#include "gem/providers.hpp"

// Newline-delimited JSON provider protocol.
//
//   request:  {"id": 7, "method": "flow", "payload": {"source": REF, "target": REF}, "params": {...}}
//   response: {"id": 7, "ok": true, "result": {...}}  or  {"id": 7, "ok": false, "error": "..."}
//
// A tensor REF is {"inline": "<base64 GEMT>"} or {"path": "/abs/file.gemt"}. Responses may arrive in
// any order; clients correlate by id. A line that is not valid JSON is answered with id -1.
namespace gem::io {

enum class Method { Features, Flow, Depth, Aesthetic, Detections, Pose };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

inline constexpr std::int64_t kMalformedRequestId = -1;

struct ProviderResponse {
    std::int64_t id = kMalformedRequestId;
    bool ok = false;
    nlohmann::json result;
    std::string error;

    nlohmann::json to_json() const;
    static ProviderResponse from_json(const nlohmann::json& j);
};

nlohmann::json inline_tensor_ref(const Tensor& t);
nlohmann::json path_tensor_ref(const std::filesystem::path& path);
Tensor resolve_tensor_ref(const nlohmann::json& ref);

/// Answers one request line. Never throws: every failure becomes an error response.
/// When params carry "out_dir", tensor results are written there and returned by path.
ProviderResponse handle_request_line(Providers& providers, const std::string& line);

/// Reads requests until end of stream and answers each in arrival order.
void serve(Providers& providers, LineChannel& channel);

/// Pipelining client: many requests may be in flight; a reader thread routes responses by id.
class ProviderClient {
public:
    static constexpr std::chrono::milliseconds kDefaultTimeout{60000};

    explicit ProviderClient(std::unique_ptr<LineChannel> channel,
                            std::chrono::milliseconds timeout = kDefaultTimeout);
    ~ProviderClient();
    ProviderClient(const ProviderClient&) = delete;
    ProviderClient& operator=(const ProviderClient&) = delete;

    /// Sends a request and returns its id without waiting.
    std::int64_t send(Method method, nlohmann::json payload, nlohmann::json params = nlohmann::json::object());
    /// Same, with the method given by name; lets conformance checks probe unknown methods.
    std::int64_t send(const std::string& method, nlohmann::json payload,
                      nlohmann::json params = nlohmann::json::object());
    /// Blocks for the response to `id`. Throws ProviderError on timeout or a closed connection.
    ProviderResponse wait(std::int64_t id);
    /// send + wait; an error response becomes a ProviderError.
    nlohmann::json call(Method method, nlohmann::json payload, nlohmann::json params = nlohmann::json::object());

    /// Responses whose id matched no outstanding request.
    std::size_t orphaned_responses() const { return m_orphans.load(); }
    /// Responses with id -1 or lines that could not be parsed.
    std::size_t malformed_responses() const { return m_malformed.load(); }
    std::size_t in_flight() const;

private:
    void reader_loop();

    std::unique_ptr<LineChannel> m_channel;
    std::chrono::milliseconds m_timeout;
    mutable std::mutex m_mutex;
    std::mutex m_write_mutex;
    std::condition_variable m_cv;
    std::map<std::int64_t, std::optional<ProviderResponse>> m_pending;
    std::int64_t m_next_id = 1;
    bool m_closed = false;
    std::atomic<std::size_t> m_orphans{0};
    std::atomic<std::size_t> m_malformed{0};
    std::thread m_reader;
};

/// Providers implemented by a remote server. Tensors go inline unless a scratch directory is set,
/// in which case they are exchanged through files in it.
class RemoteProviders final : public Providers {
public:
    explicit RemoteProviders(std::unique_ptr<LineChannel> channel, std::filesystem::path scratch_dir = {},
                             std::chrono::milliseconds timeout = ProviderClient::kDefaultTimeout);

    control::FeatureMap features(const Tensor& image, const nlohmann::json& params) override;
    control::FlowField flow(const Tensor& source, const Tensor& target, const nlohmann::json& params) override;
    Tensor depth(const Tensor& image, const nlohmann::json& params) override;
    double aesthetic(const Tensor& image, const nlohmann::json& params) override;
    std::vector<metrics::Detection> detections(const nlohmann::json& params) override;
    std::vector<metrics::KeypointSet> pose(const nlohmann::json& params) override;

    ProviderClient& client() { return m_client; }

private:
    nlohmann::json tensor_ref(const Tensor& t);
    nlohmann::json with_out_dir(const nlohmann::json& params) const;

    ProviderClient m_client;
    std::filesystem::path m_scratch;
    std::atomic<std::uint64_t> m_file_counter{0};
};

/// Conformance probe: shape contracts, error shapes and out-of-order correlation.
/// Returns a JSON summary; throws ProviderError on the first failed check.
nlohmann::json provider_self_test(ProviderClient& client);

/// "synthetic" (optionally "synthetic:CONFIG.json") or "bridge:tcp:HOST:PORT" / "bridge:cmd:COMMAND".
/// The GEM_PROVIDER environment variable, when set, replaces `endpoint`.
std::unique_ptr<Providers> open_providers(const std::string& endpoint);

/// Endpoint after applying the GEM_PROVIDER override.
std::string effective_provider_endpoint(const std::string& endpoint);

}  // namespace gem::io
