// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <filesystem>
#include <limits>
#include <string>

#include <doctest.h>

#include "gem/base64.hpp"
#include "gem/error.hpp"
#include "gem/tensor.hpp"

using namespace gem;

TEST_SUITE("tensor") {
    TEST_CASE("shape bookkeeping") {
        CHECK(shape_numel({}) == 1);
        CHECK(shape_numel({2, 3, 4}) == 24);
        CHECK(shape_numel({5, 0}) == 0);
        CHECK(shape_to_string({2, 3}) == "[2,3]");
        Tensor t({2, 3}, 1.5f);
        CHECK(t.size() == 6);
        CHECK(t.rank() == 2);
        CHECK(t.at(1, 2) == 1.5f);
        CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), ValidationError);
    }

    TEST_CASE("row-major indexing and slabs") {
        Tensor t({2, 3, 4});
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = float(i);
        CHECK(t.at(1, 2, 3) == 23.0f);
        CHECK(t.slab_size() == 12);
        CHECK(t.slab(1)[0] == 12.0f);
        CHECK(t.all_finite());
        t[5] = std::numeric_limits<float>::infinity();
        CHECK_FALSE(t.all_finite());
    }

    TEST_CASE("video latent") {
        VideoLatent v(5, 2, 3, 3);
        CHECK(v.num_frames() == 5);
        CHECK(v.frame_size() == 18);
        CHECK(v.frame_shape() == Shape{2, 3, 3});
        v.frame(3)[0] = 7.0f;
        const auto s = v.slice(2, 2);
        CHECK(s.num_frames() == 2);
        CHECK(s.frame(1)[0] == 7.0f);
        CHECK_THROWS_AS(v.slice(4, 2), ValidationError);
        CHECK_THROWS_AS(VideoLatent(Tensor({2, 3})), ValidationError);
        CHECK(latent_kind_from_string(to_string(LatentKind::DepthLatent)) == LatentKind::DepthLatent);
        CHECK_THROWS_AS(latent_kind_from_string("voxels"), ValidationError);
    }

    TEST_CASE("frame_l2") {
        VideoLatent a(2, 1, 1, 2), b(2, 1, 1, 2);
        b.frame(1)[0] = 3.0f;
        b.frame(1)[1] = 4.0f;
        const auto d = frame_l2(a, b);
        CHECK(d[0] == 0.0);
        CHECK(d[1] == doctest::Approx(5.0));
        CHECK_THROWS_AS(frame_l2(a, VideoLatent(3, 1, 1, 2)), ValidationError);
    }

    TEST_CASE("GEMT container layout") {
        Tensor t({2}, std::vector<float>{1.0f, -2.0f});
        const auto bytes = encode_gemt(t);
        REQUIRE(bytes.size() > 8);
        CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "GEMT");
        const std::uint32_t header_len = bytes[4] | (bytes[5] << 8) | (bytes[6] << 16) | (std::uint32_t(bytes[7]) << 24);
        CHECK(bytes.size() == 8 + header_len + 2 * sizeof(float));
        float tail;
        std::memcpy(&tail, bytes.data() + bytes.size() - 4, 4);
        CHECK(tail == -2.0f);
    }

    TEST_CASE("GEMT round trip preserves special values bit for bit") {
        const float specials[] = {0.0f, -0.0f, std::numeric_limits<float>::infinity(),
                                  -std::numeric_limits<float>::infinity(), std::numeric_limits<float>::quiet_NaN(),
                                  std::numeric_limits<float>::denorm_min(), std::numeric_limits<float>::max()};
        Tensor t({7}, std::vector<float>(std::begin(specials), std::end(specials)));
        const Tensor back = decode_gemt(encode_gemt(t));
        CHECK(back.shape() == t.shape());
        CHECK(std::memcmp(back.values().data(), t.values().data(), sizeof(specials)) == 0);

        const Tensor scalar({}, 3.25f);
        CHECK(decode_gemt(encode_gemt(scalar)).shape().empty());
        CHECK(decode_gemt(encode_gemt(scalar))[0] == 3.25f);
        const Tensor empty({3, 0});
        CHECK(decode_gemt(encode_gemt(empty)).shape() == Shape{3, 0});
    }

    TEST_CASE("GEMT rejects corrupt input") {
        auto bytes = encode_gemt(Tensor({2, 2}, 1.0f));
        auto bad_magic = bytes;
        bad_magic[0] = 'X';
        CHECK_THROWS_AS(decode_gemt(bad_magic), ValidationError);
        auto truncated = bytes;
        truncated.pop_back();
        CHECK_THROWS_AS(decode_gemt(truncated), ValidationError);
        CHECK_THROWS_AS(decode_gemt(std::vector<std::uint8_t>{'G', 'E'}), ValidationError);
        auto long_header = bytes;
        long_header[5] = 0x7f;
        CHECK_THROWS_AS(decode_gemt(long_header), ValidationError);
    }

    TEST_CASE("GEMT files") {
        const auto path = std::filesystem::temp_directory_path() / "gem_unit_tensor.gemt";
        const Tensor t({3, 2}, 0.25f);
        tensor_write(t, path);
        CHECK(tensor_read(path) == t);
        std::filesystem::remove(path);
        CHECK_THROWS_AS(tensor_read(path), ValidationError);
    }
}

TEST_SUITE("base64") {
    TEST_CASE("known vectors") {
        const auto enc = [](const std::string& s) {
            return base64_encode(std::vector<std::uint8_t>(s.begin(), s.end()));
        };
        CHECK(enc("") == "");
        CHECK(enc("f") == "Zg==");
        CHECK(enc("fo") == "Zm8=");
        CHECK(enc("foo") == "Zm9v");
        CHECK(enc("foobar") == "Zm9vYmFy");
        const auto dec = base64_decode("Zm9vYmE=");
        CHECK(std::string(dec.begin(), dec.end()) == "fooba");
    }

    TEST_CASE("round trip over all byte values") {
        std::vector<std::uint8_t> bytes(256 * 3 + 1);
        for (std::size_t i = 0; i < bytes.size(); ++i)
            bytes[i] = static_cast<std::uint8_t>(i * 37);
        for (std::size_t n : {0u, 1u, 2u, 3u, 100u, 769u}) {
            std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + n);
            CHECK(base64_decode(base64_encode(part)) == part);
        }
    }

    TEST_CASE("invalid characters are rejected") {
        CHECK_THROWS_AS(base64_decode("Zm9v!"), ValidationError);
    }
}
