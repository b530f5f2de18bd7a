#pragma once

#include <utility>
#include <vector>

#include "turbmit/image.hpp"

// OpenMP-parallel raster kernels. Every kernel here is deterministic
// independent of thread count: loops distribute independent pixels/rows, and
// reductions accumulate fixed-order per-row partials. Serial counterparts for
// verification live in turbmit::reference.
namespace turbmit::kernels {

// Normalized 1-D Gaussian taps, radius max(1, ceil(3*sigma)).
std::vector<float> gaussian_taps_1d(double sigma);

// True 2-D convolution with a ksize*ksize row-major kernel, replicate border.
GrayImage convolve2d(const GrayImage& img, const std::vector<float>& kernel, int ksize);

// Separable Gaussian smoothing, replicate border. sigma <= 0 returns a copy.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

// Separable 5-tap binomial smoothing [1 4 6 4 1]/16, replicate border.
// Equivalent to a Gaussian of sigma ~ 1 at a fraction of the cost.
GrayImage binomial5(const GrayImage& img);

// Backward warp with bilinear sampling and edge clamp. Values are convex
// combinations of inputs, so no range clamp is applied here.
GrayImage warp_bilinear(const GrayImage& img, const FlowField& flow);

// Center-aligned bilinear resize with edge clamp.
GrayImage bilinear_resize(const GrayImage& img, int new_width, int new_height);

// Mean over the (2*radius+1)^2 replicate-padded window around each pixel.
GrayImage box_mean(const GrayImage& img, int radius);

// Central-difference gradients, edge-clamped (one-sided halves at borders).
std::pair<GrayImage, GrayImage> gradient_central(const GrayImage& img);

// Sum of squared 3x3 Sobel magnitude over interior pixels.
double tenengrad_sum(const GrayImage& img);

// Per-pixel min and max of the (2*radius+1)^2 replicate-padded window.
std::pair<GrayImage, GrayImage> local_min_max(const GrayImage& img, int radius);

}  // namespace turbmit::kernels
