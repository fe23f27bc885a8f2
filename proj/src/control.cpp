// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "gem/control.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "gem/error.hpp"

namespace gem::control {

FeatureMap::FeatureMap(Tensor g, std::size_t stride) : grid(std::move(g)), patch_stride(stride) {
    require(grid.rank() == 3, "feature map must be [d, h, w], got " + shape_to_string(grid.shape()));
    require(grid.extent(0) >= 1 && grid.extent(1) >= 1 && grid.extent(2) >= 1, "feature map extents must be >= 1");
    require(patch_stride >= 1, "patch stride must be >= 1");
}

std::vector<float> FeatureMap::cell(std::size_t y, std::size_t x) const {
    std::vector<float> v(dim());
    for (std::size_t c = 0; c < v.size(); ++c)
        v[c] = grid.at(c, y, x);
    return v;
}

void SparseTokenMap::validate() const {
    std::set<std::pair<std::size_t, std::size_t>> cells;
    std::set<std::size_t> ids;
    for (const auto& tok : tokens) {
        require(tok.y < height && tok.x < width, "token cell out of bounds");
        require(tok.vec.size() == dim, "token vector has the wrong dimension");
        require(cells.emplace(tok.y, tok.x).second, "two tokens share a cell");
        if (tok.id)
            require(ids.insert(*tok.id).second, "identity reused within one map");
    }
}

Tensor SparseTokenMap::to_dense() const {
    Tensor out({dim, height, width});
    for (const auto& tok : tokens)
        for (std::size_t c = 0; c < dim; ++c)
            out.at(c, tok.y, tok.x) = tok.vec[c];
    return out;
}

IdentityTable IdentityTable::random(std::size_t size, std::size_t dim, std::uint64_t seed) {
    require(size >= 1 && dim >= 1, "identity table needs L >= 1 and d >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor emb({size, dim});
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < size; ++i) {
        double norm = 0.0;
        do {
            norm = 0.0;
            for (auto& e : v) {
                e = normal(rng);
                norm += e * e;
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (std::size_t c = 0; c < dim; ++c)
            emb.at(i, c) = static_cast<float>(v[c] / norm);
    }
    return IdentityTable{std::move(emb)};
}

FlowField::FlowField(Tensor g) : grid(std::move(g)) {
    require(grid.rank() == 3 && grid.extent(0) == 2, "flow field must be [2, H, W], got " + shape_to_string(grid.shape()));
    require(grid.all_finite(), "flow field contains non-finite values");
}

FlowField FlowField::constant(std::size_t height, std::size_t width, float dx, float dy) {
    Tensor g({2, height, width});
    auto d = g.data();
    std::fill(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(height * width), dx);
    std::fill(d.begin() + static_cast<std::ptrdiff_t>(height * width), d.end(), dy);
    return FlowField(std::move(g));
}

SparseTokenMap mask_tokens(const FeatureMap& features, std::size_t max_tokens, std::mt19937_64& rng,
                           std::optional<std::size_t> forced_count) {
    const std::size_t cells = features.height() * features.width();
    require(max_tokens <= cells, "max tokens " + std::to_string(max_tokens) + " exceeds the " +
                                     std::to_string(cells) + " cells of the feature map");
    std::size_t keep = 0;
    if (forced_count) {
        require(*forced_count <= max_tokens, "forced token count exceeds max tokens");
        keep = *forced_count;
    } else {
        keep = std::uniform_int_distribution<std::size_t>(0, max_tokens)(rng);
    }

    std::vector<std::size_t> all(cells);
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::size_t> chosen;
    chosen.reserve(keep);
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), keep, rng);

    SparseTokenMap out;
    out.dim = features.dim();
    out.height = features.height();
    out.width = features.width();
    out.patch_stride = features.patch_stride;
    for (auto c : chosen) {
        const std::size_t y = c / out.width;
        const std::size_t x = c % out.width;
        out.tokens.push_back({y, x, features.cell(y, x), std::nullopt});
    }
    return out;
}

SparseTokenMap assign_identities(const SparseTokenMap& map, const IdentityTable& table, std::mt19937_64& rng) {
    require(map.tokens.size() <= table.size(), "identity table too small: " + std::to_string(map.tokens.size()) +
                                                   " tokens, L = " + std::to_string(table.size()));
    require(map.tokens.empty() || table.dim() == map.dim, "identity table dimension does not match tokens");

    // Partial Fisher-Yates: the first k entries are k distinct uniform ids.
    std::vector<std::size_t> ids(table.size());
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < map.tokens.size(); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }

    SparseTokenMap out = map;
    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
        auto& tok = out.tokens[i];
        tok.id = ids[i];
        for (std::size_t c = 0; c < tok.vec.size(); ++c)
            tok.vec[c] += table.embeddings.at(ids[i], c);
    }
    return out;
}

SparseTokenMap translate_tokens(const SparseTokenMap& source, const FlowField& flow, std::size_t target_frame) {
    const std::size_t stride = source.patch_stride;
    require(flow.height() == source.height * stride && flow.width() == source.width * stride,
            "flow resolution " + std::to_string(flow.height()) + "x" + std::to_string(flow.width()) +
                " does not match token grid " + std::to_string(source.height) + "x" + std::to_string(source.width) +
                " at stride " + std::to_string(stride));
    require(target_frame > source.frame_index, "target frame must come after the source frame");

    struct Candidate {
        std::size_t source_index;
        double distance;  // displaced center to target cell center, in cells
    };
    std::map<std::pair<std::size_t, std::size_t>, Candidate> winners;

    const double s = double(stride);
    for (std::size_t i = 0; i < source.tokens.size(); ++i) {
        const auto& tok = source.tokens[i];
        double mdx = 0.0, mdy = 0.0;
        for (std::size_t py = tok.y * stride; py < (tok.y + 1) * stride; ++py)
            for (std::size_t px = tok.x * stride; px < (tok.x + 1) * stride; ++px) {
                mdx += flow.dx(py, px);
                mdy += flow.dy(py, px);
            }
        mdx /= s * s;
        mdy /= s * s;

        const double cx = (double(tok.x) + 0.5) * s + mdx;
        const double cy = (double(tok.y) + 0.5) * s + mdy;
        const double gx = std::floor(cx / s);
        const double gy = std::floor(cy / s);
        if (gx < 0 || gy < 0 || gx >= double(source.width) || gy >= double(source.height))
            continue;
        const double dist = std::hypot(cx / s - (gx + 0.5), cy / s - (gy + 0.5));
        const auto key = std::make_pair(static_cast<std::size_t>(gy), static_cast<std::size_t>(gx));
        auto it = winners.find(key);
        if (it == winners.end()) {
            winners.emplace(key, Candidate{i, dist});
        } else if (dist < it->second.distance) {
            it->second = Candidate{i, dist};
        }
    }

    SparseTokenMap out = source;
    out.frame_index = target_frame;
    out.tokens.clear();
    std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> order;
    for (const auto& [cell, cand] : winners)
        order.emplace_back(cand.source_index, cell);
    std::sort(order.begin(), order.end());
    for (const auto& [idx, cell] : order) {
        Token tok = source.tokens[idx];
        tok.y = cell.first;
        tok.x = cell.second;
        out.tokens.push_back(std::move(tok));
    }
    return out;
}

}  // namespace gem::control
