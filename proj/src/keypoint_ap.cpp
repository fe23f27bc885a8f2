// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gem/error.hpp"
#include "gem/metrics.hpp"

namespace gem::metrics {

const std::array<double, control::kNumKeypoints>& coco_keypoint_sigmas() {
    static const std::array<double, control::kNumKeypoints> kSigmas = {
        .026, .025, .025, .035, .035, .079, .079, .072, .072, .062, .062, .107, .107, .087, .087, .089, .089};
    return kSigmas;
}

double oks(const KeypointSet& pred, const KeypointSet& gt) {
    const auto& sigmas = coco_keypoint_sigmas();
    double acc = 0.0;
    std::size_t labeled = 0;
    for (std::size_t i = 0; i < control::kNumKeypoints; ++i) {
        if (gt.keypoints[i].visibility <= 0)
            continue;
        ++labeled;
        const double k = 2.0 * sigmas[i];
        const double dx = pred.keypoints[i].x - gt.keypoints[i].x;
        const double dy = pred.keypoints[i].y - gt.keypoints[i].y;
        acc += std::exp(-(dx * dx + dy * dy) / (2.0 * k * k * (gt.area + std::numeric_limits<double>::epsilon())));
    }
    return labeled ? acc / double(labeled) : 0.0;
}

std::vector<double> coco_oks_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i)
        t.push_back(double(50 + 5 * i) / 100.0);
    return t;
}

namespace {

struct ScoredMatch {
    double score;
    std::size_t image;
    std::size_t order;  // rank within its image
    bool true_positive;
    bool ignored;
};

bool labeled_any(const KeypointSet& k) {
    return std::any_of(k.keypoints.begin(), k.keypoints.end(), [](const auto& p) { return p.visibility > 0; });
}

double area_under_pr(std::vector<ScoredMatch> dets, std::size_t num_positive) {
    if (num_positive == 0)
        return 0.0;
    std::stable_sort(dets.begin(), dets.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score)
            return a.score > b.score;
        if (a.image != b.image)
            return a.image < b.image;
        return a.order < b.order;
    });
    std::vector<double> precision, recall;
    double tp = 0, fp = 0;
    for (const auto& d : dets) {
        if (d.ignored)
            continue;
        (d.true_positive ? tp : fp) += 1.0;
        recall.push_back(tp / double(num_positive));
        precision.push_back(tp / (tp + fp));
    }
    for (std::size_t i = precision.size(); i-- > 1;)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double acc = 0.0;
    for (int r = 0; r <= 100; ++r) {
        const double level = double(r) / 100.0;
        const auto it = std::lower_bound(recall.begin(), recall.end(), level);
        if (it != recall.end())
            acc += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return acc / 101.0;
}

}  // namespace

ApResult keypoint_ap(const std::vector<std::vector<KeypointSet>>& predictions,
                     const std::vector<std::vector<KeypointSet>>& ground_truth, const std::vector<double>& thresholds,
                     AreaRange area) {
    require(predictions.size() == ground_truth.size(), "keypoint AP: prediction and ground-truth image counts differ");
    ApResult result;
    result.thresholds = thresholds;

    std::vector<std::vector<bool>> gt_ignored(ground_truth.size());
    for (std::size_t img = 0; img < ground_truth.size(); ++img)
        for (const auto& g : ground_truth[img]) {
            const bool ignore = !labeled_any(g) || !area.contains(g.area);
            gt_ignored[img].push_back(ignore);
            result.num_gt += !ignore;
        }

    for (double thr : thresholds) {
        std::vector<ScoredMatch> dets;
        for (std::size_t img = 0; img < predictions.size(); ++img) {
            const auto& preds = predictions[img];
            const auto& gts = ground_truth[img];
            std::vector<std::size_t> order(preds.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

            // Non-ignored ground truths are preferred; a match to an ignored one makes the prediction ignored.
            std::vector<std::size_t> gt_order(gts.size());
            std::iota(gt_order.begin(), gt_order.end(), 0);
            std::stable_sort(gt_order.begin(), gt_order.end(),
                             [&](std::size_t a, std::size_t b) { return !gt_ignored[img][a] && gt_ignored[img][b]; });
            std::vector<bool> taken(gts.size(), false);

            for (std::size_t rank = 0; rank < order.size(); ++rank) {
                const auto& p = preds[order[rank]];
                double best = std::min(thr, 1.0 - 1e-10);
                std::optional<std::size_t> match;
                for (auto g : gt_order) {
                    if (taken[g])
                        continue;
                    if (match && !gt_ignored[img][*match] && gt_ignored[img][g])
                        break;
                    const double o = oks(p, gts[g]);
                    if (o < best)
                        continue;
                    best = o;
                    match = g;
                }
                ScoredMatch m{p.score, img, rank, false, false};
                if (match) {
                    taken[*match] = true;
                    m.true_positive = !gt_ignored[img][*match];
                    m.ignored = gt_ignored[img][*match];
                } else {
                    m.ignored = !area.contains(p.area);
                }
                dets.push_back(m);
            }
        }
        result.per_threshold.push_back(area_under_pr(std::move(dets), result.num_gt));
    }
    result.mean = result.per_threshold.empty()
                      ? 0.0
                      : std::accumulate(result.per_threshold.begin(), result.per_threshold.end(), 0.0) /
                            double(result.per_threshold.size());
    return result;
}

}  // namespace gem::metrics
