#include "turbmit/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "turbmit/kernels.hpp"

namespace turbmit::reference {

namespace {
inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }
}

GrayImage convolve2d(const GrayImage& img, const std::vector<float>& kernel, int ksize) {
    if (ksize < 1 || kernel.size() != static_cast<size_t>(ksize) * ksize)
        throw std::invalid_argument("convolve2d: kernel size mismatch");
    const int w = img.width, h = img.height, r = ksize / 2;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = 0; j < ksize; ++j)
                for (int i = 0; i < ksize; ++i)
                    acc += static_cast<double>(kernel[static_cast<size_t>(j) * ksize + i]) *
                           img.at(clampi(x - (i - r), 0, w - 1), clampi(y - (j - r), 0, h - 1));
            out.at(x, y) = static_cast<float>(acc);
        }
    return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const auto taps = kernels::gaussian_taps_1d(sigma);
    const int ksize = static_cast<int>(taps.size());
    std::vector<float> kernel(static_cast<size_t>(ksize) * ksize);
    for (int j = 0; j < ksize; ++j)
        for (int i = 0; i < ksize; ++i)
            kernel[static_cast<size_t>(j) * ksize + i] = taps[j] * taps[i];
    return convolve2d(img, kernel, ksize);
}

GrayImage warp_bilinear(const GrayImage& img, const FlowField& flow) {
    if (img.width != flow.width || img.height != flow.height)
        throw std::invalid_argument("warp_bilinear: flow shape mismatch");
    const int w = img.width, h = img.height;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t idx = static_cast<size_t>(y) * w + x;
            float sx = static_cast<float>(x) + flow.dx[idx];
            float sy = static_cast<float>(y) + flow.dy[idx];
            sx = std::min(std::max(sx, 0.0f), static_cast<float>(w - 1));
            sy = std::min(std::max(sy, 0.0f), static_cast<float>(h - 1));
            const int x0 = static_cast<int>(sx);
            const int y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, w - 1);
            const int y1 = std::min(y0 + 1, h - 1);
            const float fx = sx - static_cast<float>(x0);
            const float fy = sy - static_cast<float>(y0);
            const float top = img.at(x0, y0) + fx * (img.at(x1, y0) - img.at(x0, y0));
            const float bot = img.at(x0, y1) + fx * (img.at(x1, y1) - img.at(x0, y1));
            out.data[idx] = top + fy * (bot - top);
        }
    return out;
}

GrayImage box_mean(const GrayImage& img, int radius) {
    const int w = img.width, h = img.height;
    const double inv_count = 1.0 / (static_cast<double>(2 * radius + 1) * (2 * radius + 1));
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j)
                for (int i = -radius; i <= radius; ++i)
                    acc += img.at(clampi(x + i, 0, w - 1), clampi(y + j, 0, h - 1));
            out.at(x, y) = static_cast<float>(acc * inv_count);
        }
    return out;
}

double tenengrad_sum(const GrayImage& img) {
    const int w = img.width, h = img.height;
    if (w < 3 || h < 3) throw std::invalid_argument("tenengrad_sum: image smaller than 3x3");
    double total = 0.0;
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            const double gx = ((img.at(x + 1, y - 1) + 2.0 * img.at(x + 1, y) + img.at(x + 1, y + 1)) -
                               (img.at(x - 1, y - 1) + 2.0 * img.at(x - 1, y) + img.at(x - 1, y + 1))) / 8.0;
            const double gy = ((img.at(x - 1, y + 1) + 2.0 * img.at(x, y + 1) + img.at(x + 1, y + 1)) -
                               (img.at(x - 1, y - 1) + 2.0 * img.at(x, y - 1) + img.at(x + 1, y - 1))) / 8.0;
            total += gx * gx + gy * gy;
        }
    return total;
}

std::pair<GrayImage, GrayImage> local_min_max(const GrayImage& img, int radius) {
    const int w = img.width, h = img.height;
    GrayImage mn(w, h), mx(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float lo = img.at(x, y), hi = img.at(x, y);
            for (int j = -radius; j <= radius; ++j)
                for (int i = -radius; i <= radius; ++i) {
                    const float v = img.at(clampi(x + i, 0, w - 1), clampi(y + j, 0, h - 1));
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            mn.at(x, y) = lo;
            mx.at(x, y) = hi;
        }
    return {std::move(mn), std::move(mx)};
}

}  // namespace turbmit::reference
