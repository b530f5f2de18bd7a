#include <doctest.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "test_images.hpp"
#include "turbmit/errors.hpp"
#include "turbmit/flow.hpp"
#include "turbmit/kernels.hpp"
#include "turbmit/rng.hpp"
#include "turbmit/simulator.hpp"

using namespace turbmit;
using namespace turbmit::testsupport;

namespace {

double mean_flow_magnitude(const FlowField& f) {
    double acc = 0.0;
    for (size_t i = 0; i < f.size(); ++i) acc += std::hypot(f.dx[i], f.dy[i]);
    return acc / static_cast<double>(f.size());
}

// Residual displacement of a registered frame: flow(x) + tilt(x + flow(x)).
double residual_epe(const FlowField& est, const FlowField& tilt) {
    GrayImage tx(tilt.width, tilt.height), ty(tilt.width, tilt.height);
    tx.data = tilt.dx;
    ty.data = tilt.dy;
    const GrayImage tx_at = kernels::warp_bilinear(tx, est);
    const GrayImage ty_at = kernels::warp_bilinear(ty, est);
    double acc = 0.0;
    for (size_t i = 0; i < est.size(); ++i)
        acc += std::hypot(est.dx[i] + tx_at.data[i], est.dy[i] + ty_at.data[i]);
    return acc / static_cast<double>(est.size());
}

}  // namespace

TEST_CASE("build_reference averages per pixel") {
    const GrayImage chart = textured_chart(32, 32, 2);
    CHECK(max_abs_diff(flow::build_reference({chart, chart, chart}), chart) == 0.0);

    const GrayImage mean01 =
        flow::build_reference({GrayImage(8, 8, 0.0f), GrayImage(8, 8, 1.0f)});
    CHECK(max_abs_diff(mean01, GrayImage(8, 8, 0.5f)) == 0.0);

    CHECK_THROWS_AS(flow::build_reference({}), DataError);
    CHECK_THROWS_AS(flow::build_reference({GrayImage(4, 4), GrayImage(5, 4)}), DataError);
}

TEST_CASE("build_reference of noisy copies matches the direct-summation oracle") {
    const GrayImage pattern = textured_chart(48, 48, 7);
    const double sigma = 0.05;
    Rng rng(99);
    FrameSequence seq;
    for (int n = 0; n < 100; ++n) {
        GrayImage f = pattern;
        for (auto& v : f.data) v = clamp01(v + static_cast<float>(sigma * rng.normal()));
        seq.push_back(std::move(f));
    }
    const GrayImage mean = flow::build_reference(seq);

    // Direct per-pixel summation, independent of the implementation path.
    GrayImage oracle(48, 48);
    for (size_t i = 0; i < oracle.size(); ++i) {
        double acc = 0.0;
        for (const auto& f : seq) acc += f.data[i];
        oracle.data[i] = static_cast<float>(acc / 100.0);
    }
    CHECK(max_abs_diff(mean, oracle) < 1e-6);
    // CLT: the mean should sit within 3*sigma/sqrt(N) of the pattern
    // (clamping at [0,1] is negligible for this chart).
    CHECK(max_abs_diff(mean, pattern) < 3.0 * sigma / 10.0 + 0.01);
}

TEST_CASE("warp with zero flow is the identity") {
    const GrayImage img = textured_chart(40, 40, 3);
    const GrayImage out = flow::warp(img, FlowField(40, 40));
    CHECK(max_abs_diff(out, img) == 0.0);
}

TEST_CASE("warp by an integer flow shifts a ramp exactly") {
    GrayImage ramp(32, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 32; ++x) ramp.at(x, y) = static_cast<float>(x) / 31.0f;
    const GrayImage out = flow::warp(ramp, constant_flow(32, 8, 1.0f, 0.0f));
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 31; ++x)  // last column samples the clamped edge
            CHECK(out.at(x, y) == ramp.at(x + 1, y));
}

TEST_CASE("warp undoes a synthesized shift") {
    const GrayImage chart = textured_chart(64, 64, 13);
    const GrayImage shifted = shift_image(chart, 2, 3);
    const GrayImage back = flow::warp(shifted, constant_flow(64, 64, 2.0f, 3.0f));
    CHECK(max_abs_diff(back, chart, 4) < 2.0 / 255.0);
}

TEST_CASE("warp rejects shape mismatches") {
    CHECK_THROWS_AS(flow::warp(GrayImage(8, 8), FlowField(9, 8)), DataError);
}

TEST_CASE("estimate_flow of an image against itself is nearly zero") {
    const GrayImage chart = textured_chart(96, 96, 21);
    const FlowField f = flow::estimate_flow(chart, chart, flow::FlowParams{});
    CHECK(!f.low_texture);
    CHECK(mean_flow_magnitude(f) < 0.1);
}

TEST_CASE("estimate_flow recovers an integer shift on a content-rich chart") {
    const GrayImage ref = textured_chart(128, 128, 9);
    const GrayImage moving = shift_image(ref, 3, 0);
    const FlowField f = flow::estimate_flow(moving, ref, flow::FlowParams{});
    double epe = 0.0;
    long count = 0;
    for (int y = 16; y < 112; ++y)
        for (int x = 16; x < 112; ++x) {
            const size_t i = static_cast<size_t>(y) * 128 + x;
            epe += std::hypot(f.dx[i] - 3.0, f.dy[i]);
            ++count;
        }
    CHECK(epe / static_cast<double>(count) < 0.5);
}

TEST_CASE("estimate_flow tracks a sinusoidal warp on a checkerboard") {
    const GrayImage ref = checkerboard(256, 256, 16);
    FlowField truth(256, 256);
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x) {
            const size_t i = static_cast<size_t>(y) * 256 + x;
            truth.dx[i] = 2.0f * std::sin(2.0 * M_PI * y / 64.0);
            truth.dy[i] = 2.0f * std::cos(2.0 * M_PI * x / 48.0);
        }
    // moving carries the truth warp, so registering it back needs -truth
    const GrayImage moving = kernels::warp_bilinear(ref, truth);
    const FlowField f = flow::estimate_flow(moving, ref, flow::FlowParams{});
    double epe = 0.0;
    long count = 0;
    for (int y = 16; y < 240; ++y)
        for (int x = 16; x < 240; ++x) {
            const size_t i = static_cast<size_t>(y) * 256 + x;
            epe += std::hypot(f.dx[i] + truth.dx[i], f.dy[i] + truth.dy[i]);
            ++count;
        }
    CHECK(epe / static_cast<double>(count) < 0.75);
}

TEST_CASE("constant images set the low-texture flag instead of failing") {
    const FlowField f =
        flow::estimate_flow(GrayImage(48, 48, 0.5f), GrayImage(48, 48, 0.5f),
                            flow::FlowParams{});
    CHECK(f.low_texture);
    CHECK(mean_flow_magnitude(f) == 0.0);
}

TEST_CASE("estimate_flow validates arguments") {
    CHECK_THROWS_AS(flow::estimate_flow(GrayImage(8, 8), GrayImage(9, 8), flow::FlowParams{}),
                    DataError);
    flow::FlowParams bad;
    bad.pyramid_levels = 0;
    CHECK_THROWS_AS(flow::estimate_flow(GrayImage(8, 8), GrayImage(8, 8), bad), DataError);
}

TEST_CASE("flow stays finite and within the configured clamp") {
    const GrayImage ref = textured_chart(64, 64, 4);
    const GrayImage moving = shift_image(ref, 5, -4);
    flow::FlowParams params;
    params.max_displacement = 3.0;
    const FlowField f = flow::estimate_flow(moving, ref, params);
    for (size_t i = 0; i < f.size(); ++i) {
        REQUIRE(std::isfinite(f.dx[i]));
        REQUIRE(std::isfinite(f.dy[i]));
        REQUIRE(std::hypot(f.dx[i], f.dy[i]) <= 3.0 + 1e-4);
    }
}

TEST_CASE("register_sequence keeps identical frames identical") {
    const GrayImage chart = textured_chart(64, 64, 17);
    const FrameSequence seq(6, chart);
    const auto reg = flow::register_sequence(seq, flow::FlowParams{}, 2);
    REQUIRE(reg.frames.size() == 6);
    for (const auto& frame : reg.frames) CHECK(max_abs_diff(frame, chart) < 2.0 / 255.0);
}

TEST_CASE("registration halves the synthetic tilt error; refinement does not hurt") {
    const GrayImage chart = textured_chart(256, 256, 42);
    const int n = 16;
    FrameSequence seq(n);
    std::vector<FlowField> tilts(n);
    for (int i = 0; i < n; ++i) {
        Rng rng(split_seed(77, 1 + static_cast<uint64_t>(i)));
        tilts[i] = simulator::correlated_tilt_field(256, 256, -0.5, 1.5, rng);
        seq[static_cast<size_t>(i)] = flow::warp(chart, tilts[i]);
    }

    double unregistered = 0.0;
    for (const auto& t : tilts) unregistered += mean_flow_magnitude(t);
    unregistered /= n;

    const auto one_pass = flow::register_sequence(seq, flow::FlowParams{}, 1);
    const auto two_pass = flow::register_sequence(seq, flow::FlowParams{}, 2);
    double resid1 = 0.0, resid2 = 0.0;
    for (int i = 0; i < n; ++i) {
        resid1 += residual_epe(one_pass.flows[static_cast<size_t>(i)], tilts[static_cast<size_t>(i)]);
        resid2 += residual_epe(two_pass.flows[static_cast<size_t>(i)], tilts[static_cast<size_t>(i)]);
    }
    resid1 /= n;
    resid2 /= n;

    CHECK(resid2 < 0.5 * unregistered);
    // The second pass must not be worse than the first.
    CHECK(resid2 <= resid1 + 1e-3);
}

TEST_CASE("register_sequence is permutation-covariant") {
    const GrayImage chart = textured_chart(48, 48, 23);
    FrameSequence seq;
    for (int i = 0; i < 5; ++i) {
        Rng rng(split_seed(5, static_cast<uint64_t>(i)));
        seq.push_back(flow::warp(
            chart, simulator::correlated_tilt_field(48, 48, -0.1, 1.0, rng)));
    }
    const auto direct = flow::register_sequence(seq, flow::FlowParams{}, 2);

    const std::vector<size_t> perm{3, 0, 4, 1, 2};
    FrameSequence shuffled;
    for (const size_t p : perm) shuffled.push_back(seq[p]);
    const auto permuted = flow::register_sequence(shuffled, flow::FlowParams{}, 2);

    for (size_t k = 0; k < perm.size(); ++k)
        CHECK(max_abs_diff(permuted.frames[k], direct.frames[perm[k]]) == 0.0);
}

TEST_CASE("register_sequence validates input") {
    CHECK_THROWS_AS(flow::register_sequence({}, flow::FlowParams{}, 2), DataError);
    CHECK_THROWS_AS(flow::register_sequence({GrayImage(8, 8)}, flow::FlowParams{}, 0),
                    DataError);
}

TEST_CASE("flow raster file round trips") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() /
                          ("turbmit_flow_" + std::to_string(::getpid()) + ".raw");
    Rng rng(3);
    FlowField f(17, 9);
    for (size_t i = 0; i < f.size(); ++i) {
        f.dx[i] = static_cast<float>(rng.uniform(-5.0, 5.0));
        f.dy[i] = static_cast<float>(rng.uniform(-5.0, 5.0));
    }
    flow::save_flow(f, path);
    const FlowField back = flow::load_flow(path);
    fs::remove(path);
    REQUIRE(back.width == f.width);
    REQUIRE(back.height == f.height);
    CHECK(back.dx == f.dx);
    CHECK(back.dy == f.dy);
}
