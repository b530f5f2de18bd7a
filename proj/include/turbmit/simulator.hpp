#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "turbmit/deblur.hpp"
#include "turbmit/image.hpp"
#include "turbmit/rng.hpp"

namespace turbmit::simulator {

enum class Strength { weak, medium, strong };

std::string to_string(Strength strength);
Strength strength_from_string(const std::string& name);

// One draw of the strength-tiered simulator configuration. `distance_m` is
// sampled and recorded for metadata but takes no part in the degradation
// math.
struct TurbulenceParams {
    Strength strength = Strength::weak;
    int kernel_size = 33;
    double aperture_d = 0.0;  // meters
    double d_over_r0 = 0.0;
    double distance_m = 0.0;
    double corr = -0.5;  // spatial correlation selector, negative
    double noise_sigma = 0.01;
};

// Calibration of the dimensionless D/r0 ratio onto pixel-space degradation.
// Tiers stay visibly distinct at 256x256 with the defaults.
struct Calibration {
    double psf_sigma_per_ratio = 1.2;  // long-exposure blur, px per unit D/r0
    double tilt_rms_per_ratio = 0.8;   // tilt magnitude, px rms per unit D/r0
    double psf_jitter_lo = 0.8;        // per-frame blur jitter factor range
    double psf_jitter_hi = 1.2;
};

// Tier probabilities 0.5 / 0.3 / 0.2 (weak / medium / strong); one uniform
// draw.
Strength sample_strength(Rng& rng);

// Draw order is fixed: aperture D, D/r0 choice, distance, Corr choice.
TurbulenceParams sample_params(Strength strength, Rng& rng);

// Two independent white Gaussian fields smoothed on a power-of-two torus by
// a Gaussian of correlation length L = max(1, ceil(|corr| * min(w,h) / 2)),
// cropped, zero-meaned, and rescaled so each component's empirical rms
// matches `rms` exactly. rms = 0 returns a zero field without consuming
// randomness.
FlowField correlated_tilt_field(int width, int height, double corr, double rms, Rng& rng);

// Gaussian long-exposure blur kernel, sigma = psf_sigma_per_ratio * D/r0.
deblur::Psf long_exposure_psf(const TurbulenceParams& params, const Calibration& cal = {});

// tilt warp -> long-exposure blur (sigma jittered by U(jitter_lo, jitter_hi))
// -> additive white Gaussian noise -> clamp to [0,1]. Per-frame draw order:
// tilt field (when rms > 0), jitter, noise pixels row-major.
GrayImage degrade_frame(const GrayImage& clean, const TurbulenceParams& params, Rng& rng,
                        const Calibration& cal = {});

struct DegradedSequence {
    FrameSequence frames;
    std::vector<FlowField> tilt_fields;  // ground truth for registration oracles
    TurbulenceParams params;
};

// One parameter draw per sequence (substream 0 of `seed`), then n_frames
// independent frames on substreams 1..n. Frames are generated in parallel;
// the substream split keeps the output independent of thread count.
// noise_sigma is not part of the Table-1 draw, so it is set explicitly here.
DegradedSequence degrade_sequence(const GrayImage& clean, Strength strength, int n_frames,
                                  uint64_t seed, const Calibration& cal = {},
                                  double noise_sigma = 0.01);

}  // namespace turbmit::simulator
