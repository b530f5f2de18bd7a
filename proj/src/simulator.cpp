#include "turbmit/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "turbmit/errors.hpp"
#include "turbmit/fft.hpp"
#include "turbmit/flow.hpp"

namespace turbmit::simulator {

namespace {

constexpr double kCorrChoices[] = {-1.0, -0.1, -0.5, -0.05};

// Smooths a raster of standard normals with a periodic Gaussian of length
// `corr_len` (frequency-domain transfer exp(-2 pi^2 L^2 f^2)).
std::vector<double> smoothed_noise(size_t pw, size_t ph, double corr_len, Rng& rng) {
    std::vector<fft::cplx> plane(pw * ph);
    for (auto& v : plane) v = fft::cplx(rng.normal(), 0.0);

    fft::transform_2d(plane, pw, ph, false);
    const double coeff = -2.0 * M_PI * M_PI * corr_len * corr_len;
    for (size_t ky = 0; ky < ph; ++ky) {
        const double fy = (ky <= ph / 2 ? static_cast<double>(ky)
                                        : static_cast<double>(ky) - static_cast<double>(ph)) /
                          static_cast<double>(ph);
        for (size_t kx = 0; kx < pw; ++kx) {
            const double fx = (kx <= pw / 2 ? static_cast<double>(kx)
                                            : static_cast<double>(kx) - static_cast<double>(pw)) /
                              static_cast<double>(pw);
            plane[ky * pw + kx] *= std::exp(coeff * (fx * fx + fy * fy));
        }
    }
    fft::transform_2d(plane, pw, ph, true);

    std::vector<double> out(pw * ph);
    for (size_t i = 0; i < out.size(); ++i) out[i] = plane[i].real();
    return out;
}

// Crop, zero-mean, and rescale one component to the requested rms.
void finalize_component(const std::vector<double>& padded, size_t pw, int w, int h,
                        double rms, std::vector<float>& out) {
    std::vector<double> cropped(static_cast<size_t>(w) * h);
    double mean = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = padded[static_cast<size_t>(y) * pw + x];
            cropped[static_cast<size_t>(y) * w + x] = v;
            mean += v;
        }
    mean /= static_cast<double>(cropped.size());

    double power = 0.0;
    for (auto& v : cropped) {
        v -= mean;
        power += v * v;
    }
    const double measured = std::sqrt(power / static_cast<double>(cropped.size()));
    const double scale = measured > 1e-14 ? rms / measured : 0.0;
    for (size_t i = 0; i < cropped.size(); ++i)
        out[i] = static_cast<float>(cropped[i] * scale);
}

}  // namespace

std::string to_string(Strength strength) {
    switch (strength) {
        case Strength::weak: return "weak";
        case Strength::medium: return "medium";
        default: return "strong";
    }
}

Strength strength_from_string(const std::string& name) {
    if (name == "weak") return Strength::weak;
    if (name == "medium") return Strength::medium;
    if (name == "strong") return Strength::strong;
    throw DataError("unknown turbulence strength: " + name);
}

Strength sample_strength(Rng& rng) {
    const double u = rng.uniform();
    if (u < 0.5) return Strength::weak;
    if (u < 0.8) return Strength::medium;
    return Strength::strong;
}

TurbulenceParams sample_params(Strength strength, Rng& rng) {
    TurbulenceParams params;
    params.strength = strength;
    params.kernel_size = 33;
    switch (strength) {
        case Strength::weak: {
            static constexpr double ratios[] = {0.4, 0.8, 1.2, 1.5};
            params.aperture_d = rng.uniform(0.001, 0.005);
            params.d_over_r0 = ratios[rng.choice(4)];
            params.distance_m = rng.uniform(150.0, 600.0);
            break;
        }
        case Strength::medium: {
            static constexpr double ratios[] = {0.8, 1.0, 1.6};
            params.aperture_d = rng.uniform(0.04, 0.1);
            params.d_over_r0 = ratios[rng.choice(3)];
            params.distance_m = rng.uniform(500.0, 800.0);
            break;
        }
        case Strength::strong: {
            static constexpr double ratios[] = {1.6, 2.0, 2.4};
            params.aperture_d = rng.uniform(0.1, 0.2);
            params.d_over_r0 = ratios[rng.choice(3)];
            params.distance_m = rng.uniform(1000.0, 1500.0);
            break;
        }
    }
    params.corr = kCorrChoices[rng.choice(4)];
    return params;
}

FlowField correlated_tilt_field(int width, int height, double corr, double rms, Rng& rng) {
    if (width < 1 || height < 1) throw DataError("correlated_tilt_field: empty field");
    if (rms < 0.0) throw DataError("correlated_tilt_field: rms must be >= 0");
    FlowField field(width, height);
    if (rms == 0.0) return field;

    const double corr_len =
        std::max(1.0, std::ceil(std::abs(corr) * std::min(width, height) / 2.0));
    const size_t pw = fft::next_pow2(static_cast<size_t>(width));
    const size_t ph = fft::next_pow2(static_cast<size_t>(height));

    const auto raw_x = smoothed_noise(pw, ph, corr_len, rng);
    const auto raw_y = smoothed_noise(pw, ph, corr_len, rng);
    finalize_component(raw_x, pw, width, height, rms, field.dx);
    finalize_component(raw_y, pw, width, height, rms, field.dy);
    return field;
}

deblur::Psf long_exposure_psf(const TurbulenceParams& params, const Calibration& cal) {
    if (params.d_over_r0 <= 0.0) throw DataError("long_exposure_psf: D/r0 must be positive");
    return deblur::gaussian_psf(cal.psf_sigma_per_ratio * params.d_over_r0,
                                params.kernel_size);
}

namespace {

GrayImage degrade_one(const GrayImage& clean, const TurbulenceParams& params, Rng& rng,
                      const Calibration& cal, FlowField* tilt_out) {
    const double tilt_rms = cal.tilt_rms_per_ratio * params.d_over_r0;
    FlowField tilt =
        correlated_tilt_field(clean.width, clean.height, params.corr, tilt_rms, rng);
    GrayImage frame = flow::warp(clean, tilt);

    const double jitter = rng.uniform(cal.psf_jitter_lo, cal.psf_jitter_hi);
    const double sigma = cal.psf_sigma_per_ratio * params.d_over_r0 * jitter;
    frame = deblur::convolve(frame, deblur::gaussian_psf(sigma, params.kernel_size));

    for (auto& v : frame.data) {
        if (params.noise_sigma > 0.0)
            v += static_cast<float>(params.noise_sigma * rng.normal());
        v = clamp01(v);
    }
    if (tilt_out) *tilt_out = std::move(tilt);
    return frame;
}

}  // namespace

GrayImage degrade_frame(const GrayImage& clean, const TurbulenceParams& params, Rng& rng,
                        const Calibration& cal) {
    return degrade_one(clean, params, rng, cal, nullptr);
}

DegradedSequence degrade_sequence(const GrayImage& clean, Strength strength, int n_frames,
                                  uint64_t seed, const Calibration& cal,
                                  double noise_sigma) {
    if (n_frames < 1) throw DataError("degrade_sequence: n_frames must be >= 1");
    DegradedSequence result;
    Rng param_rng(split_seed(seed, 0));
    result.params = sample_params(strength, param_rng);
    result.params.noise_sigma = noise_sigma;
    result.frames.resize(static_cast<size_t>(n_frames));
    result.tilt_fields.resize(static_cast<size_t>(n_frames));

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_frames; ++i) {
        Rng rng(split_seed(seed, 1 + static_cast<uint64_t>(i)));
        result.frames[static_cast<size_t>(i)] =
            degrade_one(clean, result.params, rng, cal,
                        &result.tilt_fields[static_cast<size_t>(i)]);
    }
    return result;
}

}  // namespace turbmit::simulator
