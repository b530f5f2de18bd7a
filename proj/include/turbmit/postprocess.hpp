#pragma once

#include "turbmit/image.hpp"

namespace turbmit::postprocess {

struct PostprocessParams {
    double stretch_low_percentile = 1.0;
    double stretch_high_percentile = 99.0;
    double ringing_guide_blend = 1.0;  // [0,1], 1 = full suppression
    // Half-width of the guide envelope window; matches the deblur PSF radius.
    int ringing_radius = 16;
    bool enable_stretch = true;
    bool enable_ringing = true;
};

// Linearly interpolated percentile of the pixel population, pct in [0,100].
double percentile(const GrayImage& img, double pct);

// Affine map sending [p_low, p_high] percentiles onto [0,1], clamped. A
// degenerate range (p_high - p_low < 1e-6) returns the input unchanged.
GrayImage contrast_stretch(const GrayImage& img, double low_pct, double high_pct);

// Clips deconvolution overshoot against the local [min,max] envelope of the
// guide (the pre-deblur fused image) over a (2*radius+1)^2 window. Pixels
// already inside the envelope pass through untouched.
GrayImage suppress_ringing(const GrayImage& deblurred, const GrayImage& guide,
                           double blend, int radius = 16);

// Stage D: ringing suppression, then contrast stretch, then a final clamp to
// [0,1]. Stretching last keeps the output range exactly [0,1].
GrayImage postprocess(const GrayImage& img, const GrayImage& guide,
                      const PostprocessParams& params);

}  // namespace turbmit::postprocess
