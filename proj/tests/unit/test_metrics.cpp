// Copyright (C) 2026 The gem-world Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include <doctest.h>

#include "gem/error.hpp"
#include "gem/metrics.hpp"

using namespace gem;
using namespace gem::metrics;

namespace {

KeypointSet person_at(double x0, double y0, double area) {
    KeypointSet p;
    for (std::size_t i = 0; i < control::kNumKeypoints; ++i)
        p.keypoints[i] = {x0 + 3.0 * double(i), y0 + 5.0 * double(i), 2};
    p.area = area;
    return p;
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("trajectory container") {
        Trajectory t(3);
        const double p[3] = {1, 2, 3};
        t.push_back(p);
        CHECK(t.size() == 1);
        const double bad[2] = {1, 2};
        CHECK_THROWS_AS(t.push_back(bad), ValidationError);
        CHECK_THROWS_AS(Trajectory(2, {1, 2, 3}), ValidationError);
        CHECK_THROWS_AS(Trajectory(2, {1, std::numeric_limits<double>::quiet_NaN()}), ValidationError);
        CHECK(t.scaled(2.0).coords() == std::vector<double>{2, 4, 6});
    }

    TEST_CASE("ade validation") {
        CHECK_THROWS_AS(ade(Trajectory(2, {0, 0}), Trajectory(2, {0, 0, 1, 1})), ValidationError);
        CHECK_THROWS_AS(ade(Trajectory(2), Trajectory(2)), ValidationError);
        CHECK_THROWS_AS(ade(Trajectory(2, {0, 0, 0, 0}), Trajectory(4, {0, 0, 0, 0})), ValidationError);
    }

    TEST_CASE("box geometry and IoU") {
        const Box a{0, 0, 10, 10}, b{5, 0, 15, 10}, c{20, 20, 30, 30};
        CHECK(a.area() == 100);
        CHECK(a.center_x() == 5);
        CHECK(iou(a, a) == 1.0);
        CHECK(iou(a, b) == doctest::Approx(50.0 / 150.0));
        CHECK(iou(a, c) == 0.0);
        CHECK_FALSE(Box{5, 5, 5, 10}.valid());
    }

    TEST_CASE("center-of-mass distance norms") {
        const BoxTrack gen = {Box{3, 4, 13, 14}, std::nullopt, Box{0, 0, 2, 2}};
        const BoxTrack gt = {Box{0, 0, 10, 10}, Box{0, 0, 1, 1}};
        const auto l2 = com(gen, gt);
        CHECK(l2.value == doctest::Approx(5.0));
        CHECK(l2.frames_compared == 1);
        CHECK(l2.frames_skipped == 2);
        CHECK(com(gen, gt, CenterNorm::L1).value == doctest::Approx(7.0));
        CHECK_THROWS_AS(com({std::nullopt}, {std::nullopt}), ValidationError);
    }

    TEST_CASE("vehicle labels") {
        CHECK(is_vehicle_label("car"));
        CHECK(is_vehicle_label("truck"));
        CHECK_FALSE(is_vehicle_label("person"));
        CHECK_FALSE(is_vehicle_label("Car"));
    }

    TEST_CASE("largest vehicle selection and tracking") {
        std::vector<std::vector<Detection>> frames(5);
        frames[0] = {{"person", {0, 0, 50, 50}, 1.0}};
        frames[1] = {{"car", {0, 0, 10, 10}, 0.9}, {"bus", {40, 40, 60, 60}, 0.5}};
        frames[2] = {{"car", {1, 0, 11, 10}, 0.9}, {"bus", {42, 40, 62, 60}, 0.5}};
        frames[3] = {{"bus", {200, 200, 220, 220}, 0.9}};  // too far to associate
        frames[4] = {{"bus", {43, 41, 63, 61}, 0.5}, {"truck", {42, 40, 62, 60}, 0.5}};
        const auto track = select_largest_vehicle(frames);
        REQUIRE(track.size() == 5);
        CHECK_FALSE(track[0].has_value());
        CHECK(track[1]->x_min == 40);
        CHECK(track[2]->x_min == 42);
        CHECK_FALSE(track[3].has_value());
        // Association is against the last seen box (frame 2): the truck overlaps it more.
        CHECK(track[4]->x_min == 42);
        CHECK_THROWS_AS(select_largest_vehicle({{{"person", {0, 0, 1, 1}, 1.0}}}), ValidationError);
    }

    TEST_CASE("depth metrics skip invalid pixels") {
        Tensor gt({4}, std::vector<float>{10, 0, 10, std::numeric_limits<float>::infinity()});
        Tensor pred({4}, std::vector<float>{12, 5, -1, 10});
        const auto r = depth_metrics(pred, gt);
        CHECK(r.valid_pixels == 1);
        CHECK(r.abs_rel == doctest::Approx(0.2));
        CHECK(r.delta == 1.0);
        CHECK_THROWS_AS(depth_metrics(Tensor({2}), Tensor({2})), ValidationError);
        CHECK_THROWS_AS(depth_metrics(Tensor({2}, 1.f), Tensor({3}, 1.f)), ValidationError);
    }

    TEST_CASE("OKS uses labeled ground-truth keypoints only") {
        const auto gt = person_at(10, 10, 900.0);
        CHECK(oks(gt, gt) == doctest::Approx(1.0));
        auto partial = gt;
        for (std::size_t i = 0; i < 9; ++i)
            partial.keypoints[i].visibility = 0;
        auto pred = gt;
        for (std::size_t i = 0; i < 9; ++i)
            pred.keypoints[i].x += 1000.0;  // only unlabeled joints move
        CHECK(oks(pred, partial) == doctest::Approx(1.0));
        // One labeled joint displaced: term exp(-d^2 / (2 area k^2)).
        pred = gt;
        pred.keypoints[0].y += 4.0;
        const double k = 2.0 * coco_keypoint_sigmas()[0];
        CHECK(oks(pred, gt) == doctest::Approx((16.0 + std::exp(-16.0 / (2.0 * 900.0 * k * k))) / 17.0));
        KeypointSet empty;
        CHECK(oks(gt, empty) == 0.0);
    }

    TEST_CASE("area ranges are half-open at the bottom") {
        CHECK(AreaRange::large().contains(96.0 * 96.0 + 1));
        CHECK_FALSE(AreaRange::large().contains(96.0 * 96.0));
        CHECK(AreaRange::all().contains(0.0));
        CHECK(coco_oks_thresholds().size() == 10);
        CHECK(coco_oks_thresholds().back() == doctest::Approx(0.95));
    }

    TEST_CASE("AP counts false positives and misses") {
        const auto g1 = person_at(0, 0, 5000), g2 = person_at(300, 300, 5000);
        auto fp = person_at(600, 0, 5000);
        fp.score = 0.9;
        auto tp = g1;
        tp.score = 0.5;
        // Precision 1/2 at recall 1/2, nothing beyond: 51 of 101 recall levels at 0.5.
        const auto r = keypoint_ap({{fp, tp, }}, {{g1, g2}});
        CHECK(r.num_gt == 2);
        CHECK(r.mean == doctest::Approx(51.0 * 0.5 / 101.0));
        // Higher-scored correct prediction first: precision 1 up to recall 1/2.
        tp.score = 0.95;
        CHECK(keypoint_ap({{fp, tp}}, {{g1, g2}}).mean == doctest::Approx(51.0 / 101.0));
        CHECK_THROWS_AS(keypoint_ap({{}}, {{}, {}}), ValidationError);
    }

    TEST_CASE("AP area filter ignores out-of-range ground truth and its matches") {
        const auto small = person_at(0, 0, 500), big = person_at(300, 300, 20000);
        auto p_small = small, p_big = big;
        p_small.score = 0.99;
        p_big.score = 0.5;
        const auto all = keypoint_ap({{p_small, p_big}}, {{small, big}}, coco_oks_thresholds(), AreaRange::all());
        CHECK(all.num_gt == 2);
        CHECK(all.mean == doctest::Approx(1.0));
        const auto large = keypoint_ap({{p_small, p_big}}, {{small, big}}, coco_oks_thresholds(), AreaRange::large());
        CHECK(large.num_gt == 1);
        CHECK(large.mean == doctest::Approx(1.0));
        // An unmatched small prediction is ignored under the large range but counts under all.
        auto stray = person_at(900, 900, 500);
        stray.score = 0.999;
        CHECK(keypoint_ap({{stray, p_big}}, {{big}}, coco_oks_thresholds(), AreaRange::large()).mean ==
              doctest::Approx(1.0));
        CHECK(keypoint_ap({{stray, p_big}}, {{big}}).mean < 1.0);
    }
}
