#include "turbmit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace turbmit::kernels {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline float sample_bilinear(const GrayImage& img, float sx, float sy) {
    const int w = img.width, h = img.height;
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
    return top + fy * (bot - top);
}

}  // namespace

std::vector<float> gaussian_taps_1d(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        taps[i + radius] = static_cast<float>(v);
        sum += v;
    }
    for (auto& t : taps) t = static_cast<float>(t / sum);
    return taps;
}

GrayImage convolve2d(const GrayImage& img, const std::vector<float>& kernel, int ksize) {
    if (ksize < 1 || kernel.size() != static_cast<size_t>(ksize) * ksize)
        throw std::invalid_argument("convolve2d: kernel size mismatch");
    const int w = img.width, h = img.height, r = ksize / 2;
    GrayImage out(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = 0; j < ksize; ++j) {
                const int sy = clampi(y - (j - r), 0, h - 1);
                const float* row = &img.data[static_cast<size_t>(sy) * w];
                const float* krow = &kernel[static_cast<size_t>(j) * ksize];
                for (int i = 0; i < ksize; ++i) {
                    const int sx = clampi(x - (i - r), 0, w - 1);
                    acc += static_cast<double>(krow[i]) * row[sx];
                }
            }
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const auto taps = gaussian_taps_1d(sigma);
    const int r = static_cast<int>(taps.size()) / 2;
    const int w = img.width, h = img.height;

    GrayImage tmp(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const float* row = &img.data[static_cast<size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += static_cast<double>(taps[i + r]) * row[clampi(x + i, 0, w - 1)];
            tmp.at(x, y) = static_cast<float>(acc);
        }
    }
    GrayImage out(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                acc += static_cast<double>(taps[i + r]) * tmp.at(x, clampi(y + i, 0, h - 1));
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

GrayImage binomial5(const GrayImage& img) {
    const int w = img.width, h = img.height;
    GrayImage tmp(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const float* row = &img.data[static_cast<size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            tmp.at(x, y) = (row[clampi(x - 2, 0, w - 1)] + 4.0f * row[clampi(x - 1, 0, w - 1)] +
                            6.0f * row[x] + 4.0f * row[clampi(x + 1, 0, w - 1)] +
                            row[clampi(x + 2, 0, w - 1)]) *
                           0.0625f;
        }
    }
    GrayImage out(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const float* r0 = &tmp.data[static_cast<size_t>(clampi(y - 2, 0, h - 1)) * w];
        const float* r1 = &tmp.data[static_cast<size_t>(clampi(y - 1, 0, h - 1)) * w];
        const float* r2 = &tmp.data[static_cast<size_t>(y) * w];
        const float* r3 = &tmp.data[static_cast<size_t>(clampi(y + 1, 0, h - 1)) * w];
        const float* r4 = &tmp.data[static_cast<size_t>(clampi(y + 2, 0, h - 1)) * w];
        float* dst = &out.data[static_cast<size_t>(y) * w];
        for (int x = 0; x < w; ++x)
            dst[x] = (r0[x] + 4.0f * r1[x] + 6.0f * r2[x] + 4.0f * r3[x] + r4[x]) * 0.0625f;
    }
    return out;
}

GrayImage warp_bilinear(const GrayImage& img, const FlowField& flow) {
    if (img.width != flow.width || img.height != flow.height)
        throw std::invalid_argument("warp_bilinear: flow shape mismatch");
    const int w = img.width, h = img.height;
    GrayImage out(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t idx = static_cast<size_t>(y) * w + x;
            out.data[idx] = sample_bilinear(img, static_cast<float>(x) + flow.dx[idx],
                                            static_cast<float>(y) + flow.dy[idx]);
        }
    }
    return out;
}

GrayImage bilinear_resize(const GrayImage& img, int new_width, int new_height) {
    GrayImage out(new_width, new_height);
    const float sx_scale = static_cast<float>(img.width) / static_cast<float>(new_width);
    const float sy_scale = static_cast<float>(img.height) / static_cast<float>(new_height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < new_height; ++y) {
        const float sy = (static_cast<float>(y) + 0.5f) * sy_scale - 0.5f;
        for (int x = 0; x < new_width; ++x) {
            const float sx = (static_cast<float>(x) + 0.5f) * sx_scale - 0.5f;
            out.at(x, y) = sample_bilinear(img, sx, sy);
        }
    }
    return out;
}

GrayImage box_mean(const GrayImage& img, int radius) {
    const int w = img.width, h = img.height;
    const double inv_count = 1.0 / (static_cast<double>(2 * radius + 1) * (2 * radius + 1));

    // Horizontal sliding sums, replicate border.
    GrayImage tmp(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const float* row = &img.data[static_cast<size_t>(y) * w];
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += row[clampi(i, 0, w - 1)];
        tmp.at(0, y) = static_cast<float>(acc);
        for (int x = 1; x < w; ++x) {
            acc += row[clampi(x + radius, 0, w - 1)];
            acc -= row[clampi(x - radius - 1, 0, w - 1)];
            tmp.at(x, y) = static_cast<float>(acc);
        }
    }
    // Vertical pass in column blocks: per-column running sums advanced one
    // row at a time, so every access is row-major.
    GrayImage out(w, h);
#pragma omp parallel
    {
        std::vector<double> acc(static_cast<size_t>(w));
#pragma omp for schedule(static)
        for (int x0 = 0; x0 < w; x0 += 64) {
            const int x1 = std::min(x0 + 64, w);
            for (int x = x0; x < x1; ++x) {
                double a = 0.0;
                for (int i = -radius; i <= radius; ++i) a += tmp.at(x, clampi(i, 0, h - 1));
                acc[static_cast<size_t>(x)] = a;
                out.at(x, 0) = static_cast<float>(a * inv_count);
            }
            for (int y = 1; y < h; ++y) {
                const float* add = &tmp.data[static_cast<size_t>(clampi(y + radius, 0, h - 1)) * w];
                const float* sub = &tmp.data[static_cast<size_t>(clampi(y - radius - 1, 0, h - 1)) * w];
                float* dst = &out.data[static_cast<size_t>(y) * w];
                for (int x = x0; x < x1; ++x) {
                    acc[static_cast<size_t>(x)] += static_cast<double>(add[x]) - sub[x];
                    dst[x] = static_cast<float>(acc[static_cast<size_t>(x)] * inv_count);
                }
            }
        }
    }
    return out;
}

std::pair<GrayImage, GrayImage> gradient_central(const GrayImage& img) {
    const int w = img.width, h = img.height;
    GrayImage gx(w, h), gy(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            gx.at(x, y) = 0.5f * (img.at(clampi(x + 1, 0, w - 1), y) -
                                  img.at(clampi(x - 1, 0, w - 1), y));
            gy.at(x, y) = 0.5f * (img.at(x, clampi(y + 1, 0, h - 1)) -
                                  img.at(x, clampi(y - 1, 0, h - 1)));
        }
    }
    return {std::move(gx), std::move(gy)};
}

double tenengrad_sum(const GrayImage& img) {
    const int w = img.width, h = img.height;
    if (w < 3 || h < 3) throw std::invalid_argument("tenengrad_sum: image smaller than 3x3");
    // Sobel responses carry the 1/8 normalization so Gx, Gy estimate the
    // intensity derivative in luminance units per pixel.
    // Fixed-order per-row partials keep the result independent of thread count.
    std::vector<double> row_sums(static_cast<size_t>(h), 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 1; y < h - 1; ++y) {
        const float* above = &img.data[static_cast<size_t>(y - 1) * w];
        const float* mid = &img.data[static_cast<size_t>(y) * w];
        const float* below = &img.data[static_cast<size_t>(y + 1) * w];
        double acc = 0.0;
        for (int x = 1; x < w - 1; ++x) {
            const double sobel_x = ((above[x + 1] + 2.0 * mid[x + 1] + below[x + 1]) -
                                    (above[x - 1] + 2.0 * mid[x - 1] + below[x - 1])) / 8.0;
            const double sobel_y = ((below[x - 1] + 2.0 * below[x] + below[x + 1]) -
                                    (above[x - 1] + 2.0 * above[x] + above[x + 1])) / 8.0;
            acc += sobel_x * sobel_x + sobel_y * sobel_y;
        }
        row_sums[y] = acc;
    }
    double total = 0.0;
    for (double v : row_sums) total += v;
    return total;
}

std::pair<GrayImage, GrayImage> local_min_max(const GrayImage& img, int radius) {
    const int w = img.width, h = img.height;
    GrayImage hmin(w, h), hmax(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const float* row = &img.data[static_cast<size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            float lo = row[clampi(x - radius, 0, w - 1)];
            float hi = lo;
            for (int i = -radius + 1; i <= radius; ++i) {
                const float v = row[clampi(x + i, 0, w - 1)];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            hmin.at(x, y) = lo;
            hmax.at(x, y) = hi;
        }
    }
    GrayImage vmin(w, h), vmax(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float lo = hmin.at(x, clampi(y - radius, 0, h - 1));
            float hi = hmax.at(x, clampi(y - radius, 0, h - 1));
            for (int i = -radius + 1; i <= radius; ++i) {
                lo = std::min(lo, hmin.at(x, clampi(y + i, 0, h - 1)));
                hi = std::max(hi, hmax.at(x, clampi(y + i, 0, h - 1)));
            }
            vmin.at(x, y) = lo;
            vmax.at(x, y) = hi;
        }
    }
    return {std::move(vmin), std::move(vmax)};
}

}  // namespace turbmit::kernels
