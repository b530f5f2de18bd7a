#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace turbmit::fft {

using cplx = std::complex<double>;

// Smallest power of two >= n.
size_t next_pow2(size_t n);

// In-place iterative radix-2 FFT; length must be a power of two.
// inverse=true applies the conjugate transform and the 1/n scale.
void transform(std::vector<cplx>& values, bool inverse);

// Row-column 2-D FFT over a width*height row-major buffer; width and height
// must each be powers of two.
void transform_2d(std::vector<cplx>& values, size_t width, size_t height, bool inverse);

}  // namespace turbmit::fft
