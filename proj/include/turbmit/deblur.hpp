#pragma once

#include <optional>
#include <string>
#include <vector>

#include "turbmit/image.hpp"

namespace turbmit::deblur {

// Centered odd-sized blur kernel, nonnegative, summing to 1.
struct Psf {
    int size = 0;
    std::vector<double> weights;  // size*size, row-major

    double at(int x, int y) const { return weights[static_cast<size_t>(y) * size + x]; }
    int radius() const { return size / 2; }

    static Psf delta(int size = 33);
    // Throws DataError when an invariant is violated.
    void validate() const;
};

enum class DeblurMethod { wiener, richardson_lucy };

std::string to_string(DeblurMethod method);
DeblurMethod deblur_method_from_string(const std::string& name);

struct DeblurParams {
    DeblurMethod method = DeblurMethod::wiener;
    double nsr = 1e-3;
    int rl_iterations = 30;
    int psf_size = 33;
    std::vector<double> psf_sigma_grid = default_sigma_grid();
    // When set, skips blind estimation.
    std::optional<double> psf_sigma;
    std::optional<Psf> psf_override;

    static std::vector<double> default_sigma_grid();  // 0.5 .. 4.0 step 0.25
};

// Sampled isotropic Gaussian, normalized to sum exactly 1.
Psf gaussian_psf(double sigma, int size);

// 2-D convolution with replicate padding. Linear, unclamped.
// Throws when the PSF exceeds the image in either dimension.
GrayImage convolve(const GrayImage& img, const Psf& psf);

// Frequency-domain Wiener filter conj(H)*G / (|H|^2 + nsr). The image is
// replicate-extended by the PSF radius, made zero-mean, zero-padded to the
// next power of two with a cosine taper across the pad seam, filtered, and
// cropped back. |H|^2 is floored at 1e-12 so nsr=0 stays finite. The result
// is NOT clamped; clamping is the postprocess stage's job.
GrayImage wiener_deconvolve(const GrayImage& img, const Psf& psf, double nsr);

// Multiplicative Richardson-Lucy with the mirrored PSF; the input is floored
// at 1e-6 so ratios stay finite. Output is nonnegative.
GrayImage richardson_lucy(const GrayImage& img, const Psf& psf, int iterations);

// Grid search over Gaussian sigma: Wiener-deconvolve per candidate and score
// sharpness minus 10x the out-of-range (ringing) energy; ties resolve to the
// smaller sigma.
Psf estimate_psf_blind(const GrayImage& img, const DeblurParams& params);

// Stage C entry point: resolves the PSF (override > fixed sigma > blind
// estimate) and dispatches on method.
GrayImage deblur(const GrayImage& img, const DeblurParams& params);

}  // namespace turbmit::deblur
