// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "gem/error.hpp"

namespace gem {

namespace {

constexpr char kMagic[4] = {'G', 'E', 'M', 'T'};
constexpr std::size_t kMaxRank = 32;

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape)
        n *= e;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i)
        os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, float fill)
    : m_shape(std::move(shape)), m_data(shape_numel(m_shape), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : m_shape(std::move(shape)), m_data(std::move(data)) {
    require(m_data.size() == shape_numel(m_shape),
            "tensor data length " + std::to_string(m_data.size()) + " does not match shape " +
                shape_to_string(m_shape));
}

bool Tensor::all_finite() const {
    return std::all_of(m_data.begin(), m_data.end(), [](float v) { return std::isfinite(v); });
}

std::size_t Tensor::slab_size() const {
    if (m_shape.empty() || m_shape[0] == 0)
        return 0;
    return m_data.size() / m_shape[0];
}

std::span<float> Tensor::slab(std::size_t index) {
    const auto n = slab_size();
    return std::span<float>(m_data).subspan(index * n, n);
}

std::span<const float> Tensor::slab(std::size_t index) const {
    const auto n = slab_size();
    return std::span<const float>(m_data).subspan(index * n, n);
}

std::string_view to_string(LatentKind kind) {
    switch (kind) {
    case LatentKind::RgbLatent: return "rgb-latent";
    case LatentKind::DepthLatent: return "depth-latent";
    case LatentKind::Pixel: return "pixel";
    }
    return "rgb-latent";
}

LatentKind latent_kind_from_string(std::string_view name) {
    if (name == "rgb-latent") return LatentKind::RgbLatent;
    if (name == "depth-latent") return LatentKind::DepthLatent;
    if (name == "pixel") return LatentKind::Pixel;
    throw ValidationError("unknown latent kind: " + std::string(name));
}

VideoLatent::VideoLatent(Tensor frames, LatentKind kind) : m_frames(std::move(frames)), m_kind(kind) {
    const auto& s = m_frames.shape();
    require(s.size() == 4, "video latent must be rank 4 [N,C,H,W], got " + shape_to_string(s));
    require(std::all_of(s.begin(), s.end(), [](auto e) { return e >= 1; }),
            "video latent extents must be >= 1, got " + shape_to_string(s));
}

VideoLatent::VideoLatent(std::size_t n, std::size_t c, std::size_t h, std::size_t w, LatentKind kind)
    : VideoLatent(Tensor({n, c, h, w}), kind) {}

Shape VideoLatent::frame_shape() const {
    const auto& s = m_frames.shape();
    return {s[1], s[2], s[3]};
}

VideoLatent VideoLatent::slice(std::size_t begin, std::size_t count) const {
    require(count >= 1 && begin + count <= num_frames(), "frame slice out of range");
    auto shape = m_frames.shape();
    shape[0] = count;
    const auto n = frame_size();
    auto first = m_frames.values().begin() + static_cast<std::ptrdiff_t>(begin * n);
    std::vector<float> data(first, first + static_cast<std::ptrdiff_t>(count * n));
    return VideoLatent(Tensor(std::move(shape), std::move(data)), m_kind);
}

std::vector<double> frame_l2(const VideoLatent& a, const VideoLatent& b) {
    require(a.tensor().shape() == b.tensor().shape(),
            "frame_l2 shape mismatch: " + shape_to_string(a.tensor().shape()) + " vs " +
                shape_to_string(b.tensor().shape()));
    std::vector<double> out(a.num_frames());
    for (std::size_t f = 0; f < out.size(); ++f) {
        auto fa = a.frame(f);
        auto fb = b.frame(f);
        double acc = 0.0;
        for (std::size_t i = 0; i < fa.size(); ++i) {
            const double d = double(fa[i]) - double(fb[i]);
            acc += d * d;
        }
        out[f] = std::sqrt(acc);
    }
    return out;
}

std::vector<std::uint8_t> encode_gemt(const Tensor& t) {
    require(t.rank() <= kMaxRank, "unserializable shape: rank " + std::to_string(t.rank()));
    nlohmann::json header = {{"dtype", "f32"}, {"shape", t.shape()}};
    const std::string text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(8 + text.size() + 4 * t.size());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32_le(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (float v : t.data())
        put_u32_le(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

Tensor decode_gemt(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ValidationError("not a GEMT file");
    const std::uint32_t header_len = get_u32_le(bytes.data() + 4);
    if (bytes.size() - 8 < header_len)
        throw ValidationError("truncated GEMT header");

    Shape shape;
    try {
        auto header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
        if (header.at("dtype").get<std::string>() != "f32")
            throw ValidationError("unsupported dtype " + header.at("dtype").dump());
        shape = header.at("shape").get<Shape>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed GEMT header: ") + e.what());
    }
    require(shape.size() <= kMaxRank, "malformed GEMT header: rank too large");

    const auto payload = bytes.subspan(8 + header_len);
    const std::size_t numel = shape_numel(shape);
    if (payload.size() != numel * 4)
        throw ValidationError("payload length mismatch: header " + shape_to_string(shape) + " needs " +
                              std::to_string(numel * 4) + " bytes, found " + std::to_string(payload.size()));

    std::vector<float> data(numel);
    for (std::size_t i = 0; i < numel; ++i)
        data[i] = std::bit_cast<float>(get_u32_le(payload.data() + 4 * i));
    return Tensor(std::move(shape), std::move(data));
}

void tensor_write(const Tensor& t, const std::filesystem::path& path) {
    const auto bytes = encode_gemt(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ValidationError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ValidationError("write failed: " + path.string());
}

Tensor tensor_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_gemt(bytes);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace gem
