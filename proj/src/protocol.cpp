// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/protocol.hpp"

#include <array>
#include <cstdlib>

#include "gem/base64.hpp"
#include "gem/error.hpp"
#include "gem/json_io.hpp"

namespace gem::io {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Method, const char*>, 6> kMethods{{
    {Method::Features, "features"},
    {Method::Flow, "flow"},
    {Method::Depth, "depth"},
    {Method::Aesthetic, "aesthetic"},
    {Method::Detections, "detections"},
    {Method::Pose, "pose"},
}};

const json& payload_tensor(const json& payload, const char* key) {
    if (!payload.is_object() || !payload.contains(key))
        throw ValidationError(std::string("payload is missing '") + key + "'");
    return payload.at(key);
}

// Tensor results go inline unless the caller asked for files in params.out_dir.
class ResultWriter {
public:
    ResultWriter(const json& params, std::int64_t id) : m_id(id) {
        if (params.is_object() && params.contains("out_dir") && params.at("out_dir").is_string())
            m_dir = params.at("out_dir").get<std::string>();
    }

    json ref(const Tensor& t, const char* name) const {
        if (m_dir.empty())
            return inline_tensor_ref(t);
        const auto path = m_dir / ("resp-" + std::to_string(m_id) + "-" + name + ".gemt");
        tensor_write(t, path);
        return path_tensor_ref(path);
    }

private:
    std::filesystem::path m_dir;
    std::int64_t m_id;
};

json dispatch(Providers& providers, Method method, const json& payload, const json& params, std::int64_t id) {
    const ResultWriter writer(params, id);
    switch (method) {
    case Method::Features: {
        const auto fm = providers.features(resolve_tensor_ref(payload_tensor(payload, "image")), params);
        return {{"features", writer.ref(fm.grid, "features")}, {"patch_stride", fm.patch_stride}};
    }
    case Method::Flow: {
        const auto flow = providers.flow(resolve_tensor_ref(payload_tensor(payload, "source")),
                                         resolve_tensor_ref(payload_tensor(payload, "target")), params);
        return {{"flow", writer.ref(flow.grid, "flow")}};
    }
    case Method::Depth:
        return {{"depth", writer.ref(providers.depth(resolve_tensor_ref(payload_tensor(payload, "image")), params),
                                     "depth")}};
    case Method::Aesthetic:
        return {{"score", providers.aesthetic(resolve_tensor_ref(payload_tensor(payload, "image")), params)}};
    case Method::Detections: {
        json out = json::array();
        for (const auto& d : providers.detections(params))
            out.push_back(to_json(d));
        return {{"detections", out}};
    }
    case Method::Pose: {
        json out = json::array();
        for (const auto& p : providers.pose(params))
            out.push_back(to_json(p));
        return {{"people", out}};
    }
    }
    throw ValidationError("unknown method");
}

const json& result_field(const json& result, const char* key) {
    if (!result.is_object() || !result.contains(key))
        throw ProviderError(std::string("provider response is missing '") + key + "'");
    return result.at(key);
}

}  // namespace

const char* method_name(Method m) {
    for (const auto& [method, name] : kMethods)
        if (method == m)
            return name;
    return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
    for (const auto& [method, n] : kMethods)
        if (name == n)
            return method;
    return std::nullopt;
}

json ProviderResponse::to_json() const {
    json j = {{"id", id}, {"ok", ok}};
    if (ok)
        j["result"] = result;
    else
        j["error"] = error;
    return j;
}

ProviderResponse ProviderResponse::from_json(const json& j) {
    if (!j.is_object() || !j.contains("id") || !j.at("id").is_number_integer() || !j.contains("ok") ||
        !j.at("ok").is_boolean())
        throw ProviderError("malformed provider response");
    ProviderResponse r;
    r.id = j.at("id").get<std::int64_t>();
    r.ok = j.at("ok").get<bool>();
    if (r.ok)
        r.result = j.value("result", json::object());
    else
        r.error = j.contains("error") && j.at("error").is_string() ? j.at("error").get<std::string>()
                                                                  : std::string("unspecified provider error");
    return r;
}

json inline_tensor_ref(const Tensor& t) {
    return {{"inline", base64_encode(encode_gemt(t))}};
}

json path_tensor_ref(const std::filesystem::path& path) {
    return {{"path", path.string()}};
}

Tensor resolve_tensor_ref(const json& ref) {
    require(ref.is_object(), "tensor reference must be an object");
    if (ref.contains("inline")) {
        require(ref.at("inline").is_string(), "'inline' must be a base64 string");
        const auto bytes = base64_decode(ref.at("inline").get<std::string>());
        return decode_gemt(bytes);
    }
    if (ref.contains("path")) {
        require(ref.at("path").is_string(), "'path' must be a string");
        return tensor_read(ref.at("path").get<std::string>());
    }
    throw ValidationError("tensor reference needs 'inline' or 'path'");
}

ProviderResponse handle_request_line(Providers& providers, const std::string& line) {
    ProviderResponse resp;
    json req;
    try {
        req = json::parse(line);
    } catch (const json::parse_error&) {
        resp.error = "malformed request: invalid JSON";
        return resp;
    }
    if (!req.is_object() || !req.contains("id") || !req.at("id").is_number_integer()) {
        resp.error = "malformed request: missing integer id";
        return resp;
    }
    resp.id = req.at("id").get<std::int64_t>();
    const auto method_field = req.value("method", json());
    const auto method = method_field.is_string() ? method_from_name(method_field.get<std::string>()) : std::nullopt;
    if (!method) {
        resp.error = "unknown method";
        return resp;
    }
    try {
        resp.result = dispatch(providers, *method, req.value("payload", json::object()),
                               req.value("params", json::object()), resp.id);
        resp.ok = true;
    } catch (const std::exception& e) {
        resp.error = e.what();
    }
    return resp;
}

void serve(Providers& providers, LineChannel& channel) {
    while (auto line = channel.read_line()) {
        if (line->find_first_not_of(" \t\r") == std::string::npos)
            continue;
        channel.write_line(handle_request_line(providers, *line).to_json().dump());
    }
    channel.close_write();
}

ProviderClient::ProviderClient(std::unique_ptr<LineChannel> channel, std::chrono::milliseconds timeout)
    : m_channel(std::move(channel)), m_timeout(timeout) {
    require(m_channel != nullptr, "provider client needs a channel");
    m_reader = std::thread([this] { reader_loop(); });
}

ProviderClient::~ProviderClient() {
    try {
        std::lock_guard lock(m_write_mutex);
        m_channel->close_write();
    } catch (...) {
    }
    if (m_reader.joinable())
        m_reader.join();
}

void ProviderClient::reader_loop() {
    while (true) {
        std::optional<std::string> line;
        try {
            line = m_channel->read_line();
        } catch (...) {
            line.reset();
        }
        if (!line)
            break;
        if (line->find_first_not_of(" \t\r") == std::string::npos)
            continue;
        ProviderResponse resp;
        try {
            resp = ProviderResponse::from_json(json::parse(*line));
        } catch (const std::exception&) {
            ++m_malformed;
            continue;
        }
        if (resp.id == kMalformedRequestId) {
            ++m_malformed;
            continue;
        }
        std::lock_guard lock(m_mutex);
        auto it = m_pending.find(resp.id);
        if (it == m_pending.end() || it->second.has_value()) {
            ++m_orphans;
            continue;
        }
        it->second = std::move(resp);
        m_cv.notify_all();
    }
    std::lock_guard lock(m_mutex);
    m_closed = true;
    m_cv.notify_all();
}

std::int64_t ProviderClient::send(Method method, json payload, json params) {
    return send(std::string(method_name(method)), std::move(payload), std::move(params));
}

std::int64_t ProviderClient::send(const std::string& method, json payload, json params) {
    std::int64_t id;
    {
        std::lock_guard lock(m_mutex);
        if (m_closed)
            throw ProviderError("provider connection closed");
        id = m_next_id++;
        m_pending.emplace(id, std::nullopt);
    }
    const json req = {{"id", id}, {"method", method}, {"payload", std::move(payload)},
                      {"params", std::move(params)}};
    try {
        std::lock_guard lock(m_write_mutex);
        m_channel->write_line(req.dump());
    } catch (...) {
        std::lock_guard lock(m_mutex);
        m_pending.erase(id);
        throw;
    }
    return id;
}

ProviderResponse ProviderClient::wait(std::int64_t id) {
    std::unique_lock lock(m_mutex);
    auto it = m_pending.find(id);
    if (it == m_pending.end())
        throw ValidationError("no outstanding request with id " + std::to_string(id));
    const auto deadline = std::chrono::steady_clock::now() + m_timeout;
    const bool ready = m_cv.wait_until(lock, deadline, [&] { return it->second.has_value() || m_closed; });
    if (it->second) {
        ProviderResponse resp = std::move(*it->second);
        m_pending.erase(it);
        return resp;
    }
    // Keep the slot on timeout so a late reply is not miscounted as an orphan; drop it otherwise.
    if (!ready)
        throw ProviderError("provider request " + std::to_string(id) + " timed out");
    m_pending.erase(it);
    throw ProviderError("provider connection closed before request " + std::to_string(id) + " was answered");
}

json ProviderClient::call(Method method, json payload, json params) {
    auto resp = wait(send(method, std::move(payload), std::move(params)));
    if (!resp.ok)
        throw ProviderError(std::string(method_name(method)) + ": " + resp.error);
    return std::move(resp.result);
}

std::size_t ProviderClient::in_flight() const {
    std::lock_guard lock(m_mutex);
    std::size_t n = 0;
    for (const auto& [id, slot] : m_pending)
        n += slot.has_value() ? 0 : 1;
    return n;
}

RemoteProviders::RemoteProviders(std::unique_ptr<LineChannel> channel, std::filesystem::path scratch_dir,
                                 std::chrono::milliseconds timeout)
    : m_client(std::move(channel), timeout), m_scratch(std::move(scratch_dir)) {
    if (!m_scratch.empty())
        std::filesystem::create_directories(m_scratch);
}

json RemoteProviders::tensor_ref(const Tensor& t) {
    if (m_scratch.empty())
        return inline_tensor_ref(t);
    const auto path = m_scratch / ("req-" + std::to_string(m_file_counter++) + ".gemt");
    tensor_write(t, path);
    return path_tensor_ref(std::filesystem::absolute(path));
}

json RemoteProviders::with_out_dir(const json& params) const {
    json p = params.is_object() ? params : json::object();
    if (!m_scratch.empty())
        p["out_dir"] = std::filesystem::absolute(m_scratch).string();
    return p;
}

control::FeatureMap RemoteProviders::features(const Tensor& image, const json& params) {
    const auto r = m_client.call(Method::Features, {{"image", tensor_ref(image)}}, with_out_dir(params));
    return control::FeatureMap(resolve_tensor_ref(result_field(r, "features")),
                               r.value("patch_stride", control::kDefaultPatchStride));
}

control::FlowField RemoteProviders::flow(const Tensor& source, const Tensor& target, const json& params) {
    const auto r = m_client.call(Method::Flow, {{"source", tensor_ref(source)}, {"target", tensor_ref(target)}},
                                 with_out_dir(params));
    return control::FlowField(resolve_tensor_ref(result_field(r, "flow")));
}

Tensor RemoteProviders::depth(const Tensor& image, const json& params) {
    const auto r = m_client.call(Method::Depth, {{"image", tensor_ref(image)}}, with_out_dir(params));
    return resolve_tensor_ref(result_field(r, "depth"));
}

double RemoteProviders::aesthetic(const Tensor& image, const json& params) {
    const auto r = m_client.call(Method::Aesthetic, {{"image", tensor_ref(image)}}, params);
    const auto& score = result_field(r, "score");
    if (!score.is_number())
        throw ProviderError("aesthetic: score is not a number");
    return score.get<double>();
}

std::vector<metrics::Detection> RemoteProviders::detections(const json& params) {
    const auto r = m_client.call(Method::Detections, json::object(), params);
    std::vector<metrics::Detection> out;
    for (const auto& d : result_field(r, "detections"))
        out.push_back(detection_from_json(d));
    return out;
}

std::vector<metrics::KeypointSet> RemoteProviders::pose(const json& params) {
    const auto r = m_client.call(Method::Pose, json::object(), params);
    std::vector<metrics::KeypointSet> out;
    for (const auto& p : result_field(r, "people"))
        out.push_back(keypoint_set_from_json(p));
    return out;
}

json provider_self_test(ProviderClient& client) {
    const auto check = [](bool ok, const std::string& what) {
        if (!ok)
            throw ProviderError("self-test failed: " + what);
    };
    json summary;

    const Tensor image({64, 64}, 0.0f);
    const auto features = client.call(Method::Features, {{"image", inline_tensor_ref(image)}});
    const Tensor grid = resolve_tensor_ref(result_field(features, "features"));
    check(grid.rank() == 3 && grid.extent(1) == 4 && grid.extent(2) == 4, "features shape is not [d, 4, 4]");
    check(features.value("patch_stride", 0) == 16, "features patch stride is not 16");
    summary["features_shape"] = grid.shape();

    const auto depth = resolve_tensor_ref(
        result_field(client.call(Method::Depth, {{"image", inline_tensor_ref(image)}}), "depth"));
    check(depth.shape() == image.shape(), "depth shape differs from the image");
    bool positive = true;
    for (float v : depth.data())
        positive = positive && v > 0.0f;
    check(positive, "depth is not strictly positive");
    summary["depth_positive"] = true;

    const auto unknown = client.wait(client.send(std::string("segment"), json::object()));
    check(!unknown.ok && unknown.error == "unknown method", "unknown method not rejected");
    summary["unknown_method"] = unknown.error;

    // Two requests in flight, collected in reverse order.
    const auto first = client.send(Method::Aesthetic, {{"image", inline_tensor_ref(image)}});
    const auto second = client.send(Method::Features, {{"image", inline_tensor_ref(image)}});
    const auto r2 = client.wait(second);
    const auto r1 = client.wait(first);
    check(r1.id == first && r2.id == second && r1.ok && r2.ok, "pipelined responses were not correlated");
    check(r1.result.contains("score") && r2.result.contains("features"), "pipelined responses were swapped");
    summary["pipelined"] = true;
    summary["orphans"] = client.orphaned_responses();
    check(client.orphaned_responses() == 0, "orphaned responses observed");
    return summary;
}

std::string effective_provider_endpoint(const std::string& endpoint) {
    if (const char* env = std::getenv("GEM_PROVIDER"); env && *env)
        return env;
    return endpoint;
}

std::unique_ptr<Providers> open_providers(const std::string& requested) {
    const std::string endpoint = effective_provider_endpoint(requested);
    if (endpoint == "synthetic")
        return std::make_unique<SyntheticProviders>();
    if (endpoint.rfind("synthetic:", 0) == 0)
        return std::make_unique<SyntheticProviders>(synthetic_config_from_json(read_json_file(endpoint.substr(10))));
    if (endpoint.rfind("bridge:", 0) == 0)
        return std::make_unique<RemoteProviders>(open_endpoint(endpoint.substr(7)));
    throw ValidationError("unknown provider '" + endpoint + "' (expected synthetic or bridge:...)");
}

}  // namespace gem::io
