#include "turbmit/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "turbmit/errors.hpp"
#include "turbmit/kernels.hpp"

namespace turbmit::flow {

namespace {

constexpr double kTikhonovEps = 1e-4;   // damping on the LK normal matrix
constexpr double kTextureFloor = 1e-8;  // mean squared gradient below this is "no texture"
constexpr double kMaxStepPx = 1.0;      // Gauss-Newton trust region per iteration

constexpr int kMinPyramidDim = 16;

// Gaussian antialias + 2x decimation.
GrayImage pyr_down(const GrayImage& img) {
    const GrayImage smooth = kernels::gaussian_blur(img, 1.0);
    const int w2 = (img.width + 1) / 2, h2 = (img.height + 1) / 2;
    GrayImage out(w2, h2);
    for (int y = 0; y < h2; ++y)
        for (int x = 0; x < w2; ++x) out.at(x, y) = smooth.at(2 * x, 2 * y);
    return out;
}

FlowField upsample_flow(const FlowField& coarse, int w, int h) {
    GrayImage cx(coarse.width, coarse.height), cy(coarse.width, coarse.height);
    cx.data = coarse.dx;
    cy.data = coarse.dy;
    const GrayImage fx = kernels::bilinear_resize(cx, w, h);
    const GrayImage fy = kernels::bilinear_resize(cy, w, h);
    FlowField fine(w, h);
    for (size_t i = 0; i < fine.size(); ++i) {
        fine.dx[i] = 2.0f * fx.data[i];
        fine.dy[i] = 2.0f * fy.data[i];
    }
    return fine;
}

void clamp_magnitude(FlowField& flow, double max_mag) {
    const float limit = static_cast<float>(max_mag);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(flow.size()); ++i) {
        const float mag = std::sqrt(flow.dx[i] * flow.dx[i] + flow.dy[i] * flow.dy[i]);
        if (mag > limit && mag > 0.0f) {
            const float s = limit / mag;
            flow.dx[i] *= s;
            flow.dy[i] *= s;
        }
    }
}

// One Gauss-Newton sweep at a single pyramid level. The structure tensor of
// the reference is precomputed by the caller; only the residual changes per
// iteration.
void lk_iterate(const GrayImage& moving, const GrayImage& reference, const GrayImage& grad_x,
                const GrayImage& grad_y, const GrayImage& sxx, const GrayImage& sxy,
                const GrayImage& syy, int window_radius, int iterations, double max_mag,
                FlowField& flow) {
    const int w = reference.width, h = reference.height;
    GrayImage px(w, h), py(w, h);

    for (int iter = 0; iter < iterations; ++iter) {
        const GrayImage warped = kernels::warp_bilinear(moving, flow);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(warped.size()); ++i) {
            const float residual = warped.data[i] - reference.data[i];
            px.data[i] = grad_x.data[i] * residual;
            py.data[i] = grad_y.data[i] * residual;
        }
        const GrayImage bx = kernels::box_mean(px, window_radius);
        const GrayImage by = kernels::box_mean(py, window_radius);

#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(flow.size()); ++i) {
            const double a = sxx.data[i] + kTikhonovEps;
            const double b = sxy.data[i];
            const double c = syy.data[i] + kTikhonovEps;
            const double det = a * c - b * b;
            // det >= eps^2 > 0 thanks to the damping
            double ux = (c * bx.data[i] - b * by.data[i]) / det;
            double uy = (a * by.data[i] - b * bx.data[i]) / det;
            // The bilinear linearization is only trustworthy within about a
            // pixel; larger steps are left to coarser pyramid levels.
            const double step = std::sqrt(ux * ux + uy * uy);
            if (step > kMaxStepPx) {
                ux *= kMaxStepPx / step;
                uy *= kMaxStepPx / step;
            }
            flow.dx[i] -= static_cast<float>(ux);
            flow.dy[i] -= static_cast<float>(uy);
        }
        // Tilt fields are spatially smooth; a light blur lets textured
        // neighborhoods pull back pixels whose own window is ambiguous.
        GrayImage plane(w, h);
        plane.data = std::move(flow.dx);
        flow.dx = kernels::binomial5(plane).data;
        plane.data = std::move(flow.dy);
        flow.dy = kernels::binomial5(plane).data;
        clamp_magnitude(flow, max_mag);
    }
}

}  // namespace

GrayImage build_reference(const FrameSequence& seq) {
    if (seq.empty()) throw DataError("build_reference: empty sequence");
    const int w = seq.front().width, h = seq.front().height;
    for (const auto& frame : seq)
        if (!frame.same_shape(seq.front()))
            throw DataError("build_reference: frame shape mismatch");

    GrayImage mean(w, h);
    const double inv_n = 1.0 / static_cast<double>(seq.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(mean.size()); ++i) {
        double acc = 0.0;
        for (const auto& frame : seq) acc += frame.data[i];
        mean.data[i] = static_cast<float>(acc * inv_n);
    }
    return mean;
}

FlowField estimate_flow(const GrayImage& moving, const GrayImage& reference,
                        const FlowParams& params) {
    if (!moving.same_shape(reference)) throw DataError("estimate_flow: shape mismatch");
    if (params.pyramid_levels < 1 || params.window_radius < 1 ||
        params.iterations_per_level < 1)
        throw DataError("estimate_flow: invalid parameters");

    const int w = reference.width, h = reference.height;
    const double max_mag = params.max_displacement > 0.0
                               ? params.max_displacement
                               : std::min(w, h) / 4.0;

    FlowField result(w, h);
    if (kernels::tenengrad_sum(reference) /
            (static_cast<double>(w - 2) * (h - 2)) < kTextureFloor) {
        result.low_texture = true;
        return result;
    }

    const GrayImage mov0 = kernels::gaussian_blur(moving, params.smoothing_sigma);
    const GrayImage ref0 = kernels::gaussian_blur(reference, params.smoothing_sigma);

    std::vector<GrayImage> mov_pyr{mov0}, ref_pyr{ref0};
    for (int level = 1; level < params.pyramid_levels; ++level) {
        const GrayImage& prev = ref_pyr.back();
        if (std::min(prev.width, prev.height) / 2 < kMinPyramidDim) break;
        mov_pyr.push_back(pyr_down(mov_pyr.back()));
        ref_pyr.push_back(pyr_down(ref_pyr.back()));
    }

    FlowField flow(ref_pyr.back().width, ref_pyr.back().height);
    for (int level = static_cast<int>(ref_pyr.size()) - 1; level >= 0; --level) {
        const GrayImage& ref_l = ref_pyr[static_cast<size_t>(level)];
        const GrayImage& mov_l = mov_pyr[static_cast<size_t>(level)];
        if (flow.width != ref_l.width || flow.height != ref_l.height)
            flow = upsample_flow(flow, ref_l.width, ref_l.height);

        auto [gx, gy] = kernels::gradient_central(ref_l);
        GrayImage gxx(ref_l.width, ref_l.height), gxy(ref_l.width, ref_l.height),
            gyy(ref_l.width, ref_l.height);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(gx.size()); ++i) {
            gxx.data[i] = gx.data[i] * gx.data[i];
            gxy.data[i] = gx.data[i] * gy.data[i];
            gyy.data[i] = gy.data[i] * gy.data[i];
        }
        const GrayImage sxx = kernels::box_mean(gxx, params.window_radius);
        const GrayImage sxy = kernels::box_mean(gxy, params.window_radius);
        const GrayImage syy = kernels::box_mean(gyy, params.window_radius);

        const double level_max = max_mag / static_cast<double>(1 << level);
        lk_iterate(mov_l, ref_l, gx, gy, sxx, sxy, syy, params.window_radius,
                   params.iterations_per_level, std::max(level_max, 1.0), flow);
    }

    clamp_magnitude(flow, max_mag);
    result.dx = std::move(flow.dx);
    result.dy = std::move(flow.dy);
    return result;
}

GrayImage warp(const GrayImage& img, const FlowField& flow) {
    if (img.width != flow.width || img.height != flow.height)
        throw DataError("warp: shape mismatch");
    GrayImage out = kernels::warp_bilinear(img, flow);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(out.size()); ++i)
        out.data[i] = clamp01(out.data[i]);
    return out;
}

RegistrationResult register_sequence(const FrameSequence& seq, const FlowParams& params,
                                     int refinement_passes) {
    if (seq.empty()) throw DataError("register_sequence: empty sequence");
    if (refinement_passes < 1) throw DataError("register_sequence: passes must be >= 1");

    RegistrationResult result;
    result.reference = build_reference(seq);
    result.flows.resize(seq.size());
    result.frames.resize(seq.size());

    for (int pass = 0; pass < refinement_passes; ++pass) {
        if (pass > 0) result.reference = build_reference(result.frames);
        // Flow is always estimated from the original frames so the output is
        // interpolated exactly once.
        for (size_t i = 0; i < seq.size(); ++i) {
            result.flows[i] = estimate_flow(seq[i], result.reference, params);
            result.frames[i] = warp(seq[i], result.flows[i]);
        }
    }
    return result;
}

void save_flow(const FlowField& flow, const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
        std::fopen(path.string().c_str(), "wb"), std::fclose);
    if (!f) throw IoError("cannot write flow: " + path.string());
    const uint32_t wh[2] = {static_cast<uint32_t>(flow.width),
                            static_cast<uint32_t>(flow.height)};
    if (std::fwrite(wh, sizeof wh, 1, f.get()) != 1 ||
        std::fwrite(flow.dx.data(), sizeof(float), flow.size(), f.get()) != flow.size() ||
        std::fwrite(flow.dy.data(), sizeof(float), flow.size(), f.get()) != flow.size())
        throw IoError("flow write failed: " + path.string());
}

FlowField load_flow(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(
        std::fopen(path.string().c_str(), "rb"), std::fclose);
    if (!f) throw IoError("cannot open flow: " + path.string());
    uint32_t wh[2];
    if (std::fread(wh, sizeof wh, 1, f.get()) != 1 || wh[0] == 0 || wh[1] == 0)
        throw DataError("corrupt flow header: " + path.string());
    FlowField flow(static_cast<int>(wh[0]), static_cast<int>(wh[1]));
    if (std::fread(flow.dx.data(), sizeof(float), flow.size(), f.get()) != flow.size() ||
        std::fread(flow.dy.data(), sizeof(float), flow.size(), f.get()) != flow.size())
        throw DataError("truncated flow: " + path.string());
    return flow;
}

}  // namespace turbmit::flow
