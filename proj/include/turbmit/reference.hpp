#pragma once

#include <utility>
#include <vector>

#include "turbmit/image.hpp"

// Straight-line serial implementations of the parallel kernels. These are the
// ground truth the unit tests and the benchmark compare against; keep them
// naive and obviously correct, not fast.
namespace turbmit::reference {

GrayImage convolve2d(const GrayImage& img, const std::vector<float>& kernel, int ksize);

// Direct 2-D convolution with the full outer-product Gaussian kernel.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

GrayImage warp_bilinear(const GrayImage& img, const FlowField& flow);

GrayImage box_mean(const GrayImage& img, int radius);

double tenengrad_sum(const GrayImage& img);

std::pair<GrayImage, GrayImage> local_min_max(const GrayImage& img, int radius);

}  // namespace turbmit::reference
