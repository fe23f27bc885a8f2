// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include "planted_corpus.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace gem::testing {

namespace {

constexpr std::size_t kMiddle = PlantedCorpus::kClipFrames / 2;

// Per-video layout. Even and odd videos differ only in the last slot (aesthetic failure or pass),
// giving 90 passing clips, 30 aesthetic failures and 20 of every other failure mode.
Plant layout(std::size_t video, std::size_t slot) {
    static constexpr std::array<Plant, 10> kEven = {Plant::Pass,  Plant::Aesthetic, Plant::Pass,   Plant::Piqe,
                                                    Plant::Cross, Plant::Intra,     Plant::Pass,   Plant::Motion,
                                                    Plant::Pass,  Plant::Aesthetic};
    static constexpr std::array<Plant, 10> kOdd = {Plant::Pass,  Plant::Aesthetic, Plant::Pass, Plant::Piqe,
                                                   Plant::Cross, Plant::Intra,     Plant::Pass, Plant::Motion,
                                                   Plant::Pass,  Plant::Pass};
    return (video % 2 == 0 ? kEven : kOdd)[slot];
}

}  // namespace

Tensor texture_frame(std::size_t size, std::uint64_t seed, double shift_x) {
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(0.3, 1.5), angle(0.0, 6.283185307179586), amp(0.5, 1.0);
    std::array<Wave, 12> waves{};
    double total = 0.0;
    for (auto& w : waves) {
        const double f = freq(rng), d = angle(rng);
        w = {f * std::cos(d), f * std::sin(d), angle(rng), amp(rng)};
        total += w.amp;
    }
    Tensor t({size, size});
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            double v = 0.0;
            for (const auto& w : waves)
                v += w.amp * std::sin(w.fx * (double(x) + shift_x) + w.fy * double(y) + w.phase);
            t.at(y, x) = static_cast<float>(0.5 + 0.4 * v / total);
        }
    return t;
}

PlantedCorpus::PlantedCorpus(io::SyntheticProviders& providers, curation::FilterConfig cfg)
    : m_providers(providers),
      m_cfg(cfg),
      m_frames([this](const curation::VideoEntry& v, std::size_t index) {
          return frame(std::stoul(v.video_id.substr(1)), index);
      }) {
    for (std::size_t v = 0; v < kVideos; ++v) {
        curation::VideoEntry e;
        e.video_id = "v" + std::to_string(v);
        e.path = "procedural";
        e.fps = kFps;
        e.frames = kFramesPerVideo;
        m_manifest.push_back(e);
        for (std::size_t s = 0; s < kClipsPerVideo; ++s)
            m_plants.push_back(layout(v, s));
    }
    // Texture seeds whose middle frame is comfortably clean under PIQE.
    for (std::size_t c = 0; c < m_plants.size(); ++c) {
        std::uint64_t seed = 0x9e3779b97f4a7c15ull * (c + 1);
        m_seeds.push_back(seed);
        while (m_plants[c] != Plant::Piqe && curation::piqe(raw_frame(c, kMiddle), m_cfg.piqe).score >= kCleanPiqe)
            m_seeds[c] = ++seed;
    }
    for (std::size_t c = 0; c < m_plants.size(); ++c) {
        if (m_plants[c] == Plant::Cross)
            continue;  // copies an earlier clip's pinned middle frame
        m_middles.emplace(c, pinned_middle(c, m_plants[c] != Plant::Aesthetic));
    }
    for (std::size_t c = 0; c < m_plants.size(); ++c)
        if (m_plants[c] == Plant::Cross) {
            // Duplicate of the nearest earlier passing clip in the same video.
            std::size_t src = c;
            while (src % kClipsPerVideo != 0 && m_plants[src] != Plant::Pass)
                --src;
            if (m_plants[src] != Plant::Pass)
                throw std::logic_error("cross plant needs an earlier passing clip");
            m_middles.emplace(c, m_middles.at(src));
        }
}

std::size_t PlantedCorpus::count(Plant p) const {
    std::size_t n = 0;
    for (auto q : m_plants)
        n += q == p;
    return n;
}

Tensor PlantedCorpus::raw_frame(std::size_t clip, std::size_t local) const {
    const std::uint64_t seed = m_seeds[clip];
    switch (m_plants[clip]) {
    case Plant::Piqe:
        if (local == kMiddle)
            return Tensor({kSize, kSize}, 0.5f);
        break;
    case Plant::Intra:
        return texture_frame(kSize, seed);
    case Plant::Motion: {
        // No global motion; the second half swaps the texture inside one 16 x 16 cell.
        Tensor t = texture_frame(kSize, seed);
        if (local > kMiddle) {
            const Tensor other = texture_frame(16, seed ^ 0xabcdefull);
            for (std::size_t y = 0; y < 16; ++y)
                for (std::size_t x = 0; x < 16; ++x)
                    t.at(y, x) = other.at(y, x);
        }
        return t;
    }
    default: break;
    }
    const double pan = kPanPixels * double(local) / double(kClipFrames - 1);
    return texture_frame(kSize, seed, std::round(pan));
}

Tensor PlantedCorpus::pinned_middle(std::size_t clip, bool want_pass) const {
    const Tensor base = raw_frame(clip, kMiddle);
    for (int k = 0; k < 4096; ++k) {
        Tensor t = base;
        t.at(0, 0) += 1e-5f * float(k);
        const double s = m_providers.aesthetic(t, nlohmann::json::object());
        if ((s > m_cfg.aesthetic_min) == want_pass)
            return t;
    }
    throw std::logic_error("could not pin the aesthetic verdict");
}

Tensor PlantedCorpus::frame(std::size_t video, std::size_t index) const {
    const std::size_t clip = video * kClipsPerVideo + index / kClipFrames;
    const std::size_t local = index % kClipFrames;
    if (local == kMiddle)
        return m_middles.at(clip);
    return raw_frame(clip, local);
}

std::array<std::size_t, 5> PlantedCorpus::expected_survivors() const {
    std::array<std::size_t, 5> out{};
    const std::array<Plant, 5> order = {Plant::Aesthetic, Plant::Piqe, Plant::Intra, Plant::Motion, Plant::Cross};
    std::size_t alive = m_plants.size();
    for (std::size_t k = 0; k < 5; ++k) {
        alive -= count(order[k]);
        out[k] = alive;
    }
    return out;
}

}  // namespace gem::testing
