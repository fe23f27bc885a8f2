// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gem {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major f32 array. A rank-0 tensor holds one value.
class Tensor {
public:
    Tensor() : Tensor(Shape{0}) {}
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const { return m_shape; }
    std::size_t rank() const { return m_shape.size(); }
    std::size_t extent(std::size_t axis) const { return m_shape.at(axis); }
    std::size_t size() const { return m_data.size(); }

    std::span<float> data() { return m_data; }
    std::span<const float> data() const { return m_data; }
    const std::vector<float>& values() const { return m_data; }

    float& operator[](std::size_t i) { return m_data[i]; }
    float operator[](std::size_t i) const { return m_data[i]; }

    // 2-, 3- and 4-index element access (row-major, unchecked).
    float& at(std::size_t i, std::size_t j) { return m_data[i * m_shape[1] + j]; }
    float at(std::size_t i, std::size_t j) const { return m_data[i * m_shape[1] + j]; }
    float& at(std::size_t i, std::size_t j, std::size_t k) {
        return m_data[(i * m_shape[1] + j) * m_shape[2] + k];
    }
    float at(std::size_t i, std::size_t j, std::size_t k) const {
        return m_data[(i * m_shape[1] + j) * m_shape[2] + k];
    }
    float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return m_data[((n * m_shape[1] + c) * m_shape[2] + h) * m_shape[3] + w];
    }
    float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return m_data[((n * m_shape[1] + c) * m_shape[2] + h) * m_shape[3] + w];
    }

    bool all_finite() const;

    // View of the index-th slab along axis 0.
    std::span<float> slab(std::size_t index);
    std::span<const float> slab(std::size_t index) const;
    std::size_t slab_size() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape m_shape;
    std::vector<float> m_data;
};

enum class LatentKind { RgbLatent, DepthLatent, Pixel };

std::string_view to_string(LatentKind kind);
LatentKind latent_kind_from_string(std::string_view name);

/// N x C x H x W frame stack.
class VideoLatent {
public:
    explicit VideoLatent(Tensor frames, LatentKind kind = LatentKind::RgbLatent);
    VideoLatent(std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                LatentKind kind = LatentKind::RgbLatent);

    const Tensor& tensor() const { return m_frames; }
    Tensor& tensor() { return m_frames; }
    LatentKind kind() const { return m_kind; }

    std::size_t num_frames() const { return m_frames.extent(0); }
    std::size_t frame_size() const { return m_frames.slab_size(); }
    Shape frame_shape() const;

    std::span<float> frame(std::size_t i) { return m_frames.slab(i); }
    std::span<const float> frame(std::size_t i) const { return m_frames.slab(i); }

    // Copy of frames [begin, begin + count).
    VideoLatent slice(std::size_t begin, std::size_t count) const;

private:
    Tensor m_frames;
    LatentKind m_kind;
};

/// Euclidean distance per frame. Shapes must match exactly.
std::vector<double> frame_l2(const VideoLatent& a, const VideoLatent& b);

// GEMT container: "GEMT" | u32 LE header length | JSON header | LE f32 payload.
std::vector<std::uint8_t> encode_gemt(const Tensor& t);
Tensor decode_gemt(std::span<const std::uint8_t> bytes);

void tensor_write(const Tensor& t, const std::filesystem::path& path);
Tensor tensor_read(const std::filesystem::path& path);

}  // namespace gem
