#include "turbmit/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace turbmit::fft {

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void transform(std::vector<cplx>& values, bool inverse) {
    const size_t n = values.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft: length must be a power of two");
    if (n == 1) return;

    // Bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(values[i], values[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const cplx wlen(std::cos(angle), std::sin(angle));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const cplx u = values[i + k];
                const cplx v = values[i + k + len / 2] * w;
                values[i + k] = u + v;
                values[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : values) v *= scale;
    }
}

void transform_2d(std::vector<cplx>& values, size_t width, size_t height, bool inverse) {
    if (values.size() != width * height)
        throw std::invalid_argument("fft: buffer does not match width*height");

#pragma omp parallel
    {
        std::vector<cplx> line(width);
#pragma omp for schedule(static)
        for (long y = 0; y < static_cast<long>(height); ++y) {
            for (size_t x = 0; x < width; ++x) line[x] = values[y * width + x];
            transform(line, inverse);
            for (size_t x = 0; x < width; ++x) values[y * width + x] = line[x];
        }
    }
#pragma omp parallel
    {
        std::vector<cplx> line(height);
#pragma omp for schedule(static)
        for (long x = 0; x < static_cast<long>(width); ++x) {
            for (size_t y = 0; y < height; ++y) line[y] = values[y * width + x];
            transform(line, inverse);
            for (size_t y = 0; y < height; ++y) values[y * width + x] = line[y];
        }
    }
}

}  // namespace turbmit::fft
