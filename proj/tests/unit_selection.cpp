#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "test_images.hpp"
#include "turbmit/errors.hpp"
#include "turbmit/flow.hpp"
#include "turbmit/kernels.hpp"
#include "turbmit/rng.hpp"
#include "turbmit/selection.hpp"

using namespace turbmit;
using namespace turbmit::testsupport;

TEST_CASE("sharpness of a constant image is zero") {
    CHECK(selection::sharpness(GrayImage(16, 16, 0.42f)) == 0.0);
    CHECK_THROWS_AS(selection::sharpness(GrayImage(2, 5, 0.0f)), DataError);
}

TEST_CASE("sharpness of a vertical step edge matches the direct Sobel oracle") {
    const int w = 24, h = 16;
    GrayImage step(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) step.at(x, y) = x < w / 2 ? 0.0f : 1.0f;

    // Direct interior Sobel accumulation with the same 1/8-normalized taps.
    double oracle = 0.0;
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            const double gx = ((step.at(x + 1, y - 1) + 2.0 * step.at(x + 1, y) +
                                step.at(x + 1, y + 1)) -
                               (step.at(x - 1, y - 1) + 2.0 * step.at(x - 1, y) +
                                step.at(x - 1, y + 1))) / 8.0;
            const double gy = ((step.at(x - 1, y + 1) + 2.0 * step.at(x, y + 1) +
                                step.at(x + 1, y + 1)) -
                               (step.at(x - 1, y - 1) + 2.0 * step.at(x, y - 1) +
                                step.at(x + 1, y - 1))) / 8.0;
            oracle += gx * gx + gy * gy;
        }
    oracle /= static_cast<double>((w - 2) * (h - 2));

    CHECK(oracle > 0.0);
    CHECK(selection::sharpness(step) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("sharpness strictly decreases with Gaussian blur across the corpus") {
    const double sigmas[] = {0.0, 0.5, 1.0, 2.0, 4.0};
    for (int idx = 0; idx < 20; ++idx) {
        const GrayImage img = corpus_image(idx, 128, 128);
        double prev = std::numeric_limits<double>::infinity();
        for (const double sigma : sigmas) {
            const double s = selection::sharpness(kernels::gaussian_blur(img, sigma));
            CHECK(s < prev);
            prev = s;
        }
    }
}

TEST_CASE("sharpness ignores constant offsets and scales quadratically") {
    const GrayImage img = corpus_image(5, 64, 64);
    GrayImage lifted = img, halved = img;
    for (auto& v : lifted.data) v = v * 0.5f + 0.25f;  // affine, stays in range
    for (auto& v : halved.data) v *= 0.5f;
    const double base = selection::sharpness(img);
    CHECK(selection::sharpness(lifted) == doctest::Approx(0.25 * base).epsilon(1e-6));
    CHECK(selection::sharpness(halved) == doctest::Approx(0.25 * base).epsilon(1e-6));

    GrayImage shifted = img;
    for (auto& v : shifted.data) v = v * 0.5f;
    GrayImage shifted_up = shifted;
    for (auto& v : shifted_up.data) v += 0.25f;
    CHECK(selection::sharpness(shifted_up) ==
          doctest::Approx(selection::sharpness(shifted)).epsilon(1e-6));
}

TEST_CASE("rank_frames sorts by sharpness with a stable tie-break") {
    const GrayImage sharp = corpus_image(0, 64, 64);
    const GrayImage soft = kernels::gaussian_blur(sharp, 2.0);

    const auto two = selection::rank_frames({sharp, soft});
    REQUIRE(two.size() == 2);
    CHECK(two[0].frame_index == 0);
    CHECK(two[1].frame_index == 1);

    const auto ties = selection::rank_frames(FrameSequence(4, sharp));
    for (size_t i = 0; i < 4; ++i) CHECK(ties[i].frame_index == i);

    // 10 sharp + 10 blurred copies: the sharp ones fill the top half.
    FrameSequence mixed;
    const GrayImage blurred = kernels::gaussian_blur(sharp, 3.0);
    for (int i = 0; i < 10; ++i) mixed.push_back(i % 2 ? sharp : blurred);
    for (int i = 0; i < 10; ++i) mixed.push_back(i % 2 ? blurred : sharp);
    const auto ranked = selection::rank_frames(mixed);
    std::set<size_t> top;
    for (int i = 0; i < 10; ++i) top.insert(ranked[static_cast<size_t>(i)].frame_index);
    for (size_t idx : top) CHECK(selection::sharpness(mixed[idx]) ==
                                 doctest::Approx(selection::sharpness(sharp)));

    // Output is a permutation of 0..N-1.
    std::set<size_t> all;
    for (const auto& s : ranked) all.insert(s.frame_index);
    CHECK(all.size() == mixed.size());
}

TEST_CASE("select_and_average with keep_fraction 1 equals build_reference") {
    FrameSequence seq;
    for (int i = 0; i < 5; ++i) seq.push_back(corpus_image(i, 48, 48));
    selection::SelectionParams params;
    params.keep_fraction = 1.0;
    params.min_keep = 1;
    const GrayImage fused = selection::select_and_average(seq, params);
    CHECK(max_abs_diff(fused, flow::build_reference(seq)) < 1e-6);
}

TEST_CASE("select_and_average keeps K = max(min_keep, round(f*N)) clamped to N") {
    const GrayImage sharp = corpus_image(1, 48, 48);
    const GrayImage blurred = kernels::gaussian_blur(sharp, 3.0);

    // N=4, keep_fraction 0.1, min_keep 8 -> K = 4 (all frames).
    selection::SelectionParams clamped;
    clamped.keep_fraction = 0.1;
    clamped.min_keep = 8;
    const FrameSequence four{sharp, blurred, sharp, blurred};
    const GrayImage all4 = selection::select_and_average(four, clamped);
    CHECK(max_abs_diff(all4, flow::build_reference(four)) < 1e-6);

    // N=20 half sharp: keep_fraction 0.5, min_keep 1 -> exactly the 10 sharp.
    FrameSequence mixed;
    for (int i = 0; i < 10; ++i) mixed.push_back(sharp);
    for (int i = 0; i < 10; ++i) mixed.push_back(blurred);
    selection::SelectionParams half;
    half.keep_fraction = 0.5;
    half.min_keep = 1;
    const GrayImage fused = selection::select_and_average(mixed, half);
    CHECK(max_abs_diff(fused, sharp) < 1e-6);
}

TEST_CASE("select_and_average output stays inside the selected frames' envelope") {
    Rng rng(31);
    FrameSequence seq;
    for (int i = 0; i < 7; ++i) {
        GrayImage f(20, 20);
        for (auto& v : f.data) v = static_cast<float>(rng.uniform());
        seq.push_back(std::move(f));
    }
    selection::SelectionParams params;
    params.keep_fraction = 1.0;  // envelope over every frame
    params.min_keep = 1;
    const GrayImage fused = selection::select_and_average(seq, params);
    for (size_t i = 0; i < fused.size(); ++i) {
        float lo = 1.0f, hi = 0.0f;
        for (const auto& f : seq) {
            lo = std::min(lo, f.data[i]);
            hi = std::max(hi, f.data[i]);
        }
        CHECK(fused.data[i] >= lo - 1e-6f);
        CHECK(fused.data[i] <= hi + 1e-6f);
    }
}

TEST_CASE("selection validates parameters") {
    CHECK_THROWS_AS(selection::rank_frames({}), DataError);
    selection::SelectionParams bad;
    bad.keep_fraction = 0.0;
    CHECK_THROWS_AS(selection::select_and_average({GrayImage(8, 8)}, bad), DataError);
}
