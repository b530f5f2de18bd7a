#include "turbmit/deblur.hpp"

#include <algorithm>
#include <cmath>

#include "turbmit/errors.hpp"
#include "turbmit/fft.hpp"
#include "turbmit/kernels.hpp"
#include "turbmit/selection.hpp"

namespace turbmit::deblur {

namespace {

constexpr double kSpectrumFloor = 1e-12;
constexpr double kRlValueFloor = 1e-6;
constexpr double kRingingWeight = 10.0;

std::vector<float> to_float_kernel(const Psf& psf) {
    return std::vector<float>(psf.weights.begin(), psf.weights.end());
}

Psf mirrored(const Psf& psf) {
    Psf m{psf.size, std::vector<double>(psf.weights.size())};
    for (int y = 0; y < psf.size; ++y)
        for (int x = 0; x < psf.size; ++x)
            m.weights[static_cast<size_t>(y) * psf.size + x] =
                psf.at(psf.size - 1 - x, psf.size - 1 - y);
    return m;
}

// Mean of |v - clamp(v,0,1)|: the overshoot a deconvolution pushed outside
// the displayable range. Used as a cheap ringing proxy.
double out_of_range_energy(const GrayImage& img) {
    double acc = 0.0;
    for (const float v : img.data) {
        if (v < 0.0f) acc += -v;
        else if (v > 1.0f) acc += v - 1.0f;
    }
    return acc / static_cast<double>(img.size());
}

}  // namespace

Psf Psf::delta(int size) {
    Psf psf{size, std::vector<double>(static_cast<size_t>(size) * size, 0.0)};
    psf.weights[static_cast<size_t>(size / 2) * size + size / 2] = 1.0;
    return psf;
}

void Psf::validate() const {
    if (size < 1 || size % 2 == 0) throw DataError("psf: size must be odd and positive");
    if (weights.size() != static_cast<size_t>(size) * size)
        throw DataError("psf: weight count mismatch");
    double sum = 0.0;
    for (const double w : weights) {
        if (!(w >= 0.0)) throw DataError("psf: negative or non-finite weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw DataError("psf: weights do not sum to 1");
}

std::string to_string(DeblurMethod method) {
    return method == DeblurMethod::wiener ? "wiener" : "richardson_lucy";
}

DeblurMethod deblur_method_from_string(const std::string& name) {
    if (name == "wiener") return DeblurMethod::wiener;
    if (name == "richardson_lucy" || name == "rl") return DeblurMethod::richardson_lucy;
    throw DataError("unknown deblur method: " + name);
}

std::vector<double> DeblurParams::default_sigma_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 14; ++i) grid.push_back(0.5 + 0.25 * i);
    return grid;
}

Psf gaussian_psf(double sigma, int size) {
    if (sigma <= 0.0) throw DataError("gaussian_psf: sigma must be positive");
    if (size < 1 || size % 2 == 0) throw DataError("gaussian_psf: size must be odd");
    Psf psf{size, std::vector<double>(static_cast<size_t>(size) * size)};
    const int r = size / 2;
    double sum = 0.0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double v = std::exp(-0.5 * (x * x + y * y) / (sigma * sigma));
            psf.weights[static_cast<size_t>(y + r) * size + (x + r)] = v;
            sum += v;
        }
    for (auto& w : psf.weights) w /= sum;
    return psf;
}

GrayImage convolve(const GrayImage& img, const Psf& psf) {
    psf.validate();
    if (psf.size > img.width || psf.size > img.height)
        throw DataError("convolve: psf larger than image");
    return kernels::convolve2d(img, to_float_kernel(psf), psf.size);
}

namespace {

// Raised-cosine rolloff, 1 at d=0 down to 0 at d>=width.
inline double taper(int d, int width) {
    if (d >= width) return 0.0;
    return 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(d) / width));
}

// Fills the pad band [used, padded) so the periodic continuation is
// continuous: both the trailing edge and the (wrapped) leading edge decay
// smoothly into zero. Works on mean-subtracted lines.
void fill_pad_band(std::vector<double>& line, int used, int padded) {
    if (used == padded) return;
    const int width = std::min(48, (padded - used + 1) / 2);
    const double first = line[0], last = line[static_cast<size_t>(used - 1)];
    for (int x = used; x < padded; ++x)
        line[static_cast<size_t>(x)] =
            taper(x - used + 1, width) * last + taper(padded - x, width) * first;
}

}  // namespace

GrayImage wiener_deconvolve(const GrayImage& img, const Psf& psf, double nsr) {
    psf.validate();
    if (nsr < 0.0) throw DataError("wiener_deconvolve: nsr must be >= 0");
    const int w = img.width, h = img.height, r = psf.radius();
    const int we = w + 2 * r, he = h + 2 * r;
    const size_t pw = fft::next_pow2(static_cast<size_t>(we));
    const size_t ph = fft::next_pow2(static_cast<size_t>(he));

    // Replicate-extend by the PSF radius and shift to zero mean. The zero
    // padding then continues the signal at its mean level, with a cosine
    // taper bridging both edges so the periodic extension has no step to
    // ring on (the inverse filter amplifies any discontinuity broadband).
    std::vector<double> extended(static_cast<size_t>(we) * he);
    double mean = 0.0;
    for (int y = 0; y < he; ++y)
        for (int x = 0; x < we; ++x) {
            const int sx = std::clamp(x - r, 0, w - 1);
            const int sy = std::clamp(y - r, 0, h - 1);
            const double v = img.at(sx, sy);
            extended[static_cast<size_t>(y) * we + x] = v;
            mean += v;
        }
    mean /= static_cast<double>(extended.size());

    std::vector<fft::cplx> spectrum(pw * ph, fft::cplx(0.0, 0.0));
    {
        std::vector<double> row(pw), column(ph);
        std::vector<double> horizontal(pw * static_cast<size_t>(he));
        for (int y = 0; y < he; ++y) {
            for (int x = 0; x < we; ++x)
                row[static_cast<size_t>(x)] = extended[static_cast<size_t>(y) * we + x] - mean;
            fill_pad_band(row, we, static_cast<int>(pw));
            for (size_t x = 0; x < pw; ++x)
                horizontal[static_cast<size_t>(y) * pw + x] = row[x];
        }
        for (size_t x = 0; x < pw; ++x) {
            for (int y = 0; y < he; ++y)
                column[static_cast<size_t>(y)] = horizontal[static_cast<size_t>(y) * pw + x];
            fill_pad_band(column, he, static_cast<int>(ph));
            for (size_t y = 0; y < ph; ++y)
                spectrum[y * pw + x] = column[y];
        }
    }

    // PSF centered at the origin of the periodic grid.
    std::vector<fft::cplx> transfer(pw * ph, fft::cplx(0.0, 0.0));
    for (int y = 0; y < psf.size; ++y)
        for (int x = 0; x < psf.size; ++x) {
            const size_t gx = static_cast<size_t>((x - r + static_cast<int>(pw)) % static_cast<int>(pw));
            const size_t gy = static_cast<size_t>((y - r + static_cast<int>(ph)) % static_cast<int>(ph));
            transfer[gy * pw + gx] = psf.at(x, y);
        }

    fft::transform_2d(spectrum, pw, ph, false);
    fft::transform_2d(transfer, pw, ph, false);
    for (size_t i = 0; i < spectrum.size(); ++i) {
        const double power = std::norm(transfer[i]);
        spectrum[i] = std::conj(transfer[i]) * spectrum[i] /
                      (std::max(power, kSpectrumFloor) + nsr);
    }
    fft::transform_2d(spectrum, pw, ph, true);

    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = static_cast<float>(
                spectrum[static_cast<size_t>(y + r) * pw + (x + r)].real() + mean);
    return out;
}

GrayImage richardson_lucy(const GrayImage& img, const Psf& psf, int iterations) {
    psf.validate();
    if (iterations < 1) throw DataError("richardson_lucy: iterations must be >= 1");
    const auto kernel = to_float_kernel(psf);
    const auto kernel_mirror = to_float_kernel(mirrored(psf));

    GrayImage observed = img;
    for (auto& v : observed.data) v = std::max(v, static_cast<float>(kRlValueFloor));

    GrayImage estimate = observed;
    GrayImage ratio(img.width, img.height);
    for (int iter = 0; iter < iterations; ++iter) {
        const GrayImage predicted = kernels::convolve2d(estimate, kernel, psf.size);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(ratio.size()); ++i)
            ratio.data[i] = observed.data[i] /
                            std::max(predicted.data[i], static_cast<float>(kSpectrumFloor));
        const GrayImage correction = kernels::convolve2d(ratio, kernel_mirror, psf.size);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(estimate.size()); ++i)
            estimate.data[i] *= correction.data[i];
    }
    return estimate;
}

Psf estimate_psf_blind(const GrayImage& img, const DeblurParams& params) {
    if (params.psf_sigma_grid.empty())
        throw DataError("estimate_psf_blind: empty sigma grid");
    double best_sigma = 0.0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const double sigma : params.psf_sigma_grid) {
        if (sigma <= 0.0) throw DataError("estimate_psf_blind: non-positive grid sigma");
        const Psf candidate = gaussian_psf(sigma, params.psf_size);
        const GrayImage restored = wiener_deconvolve(img, candidate, params.nsr);
        const double score = selection::sharpness(restored) -
                             kRingingWeight * out_of_range_energy(restored);
        // Strict improvement only: equal scores keep the smaller sigma.
        if (score > best_score) {
            best_score = score;
            best_sigma = sigma;
        }
    }
    return gaussian_psf(best_sigma, params.psf_size);
}

GrayImage deblur(const GrayImage& img, const DeblurParams& params) {
    Psf psf = params.psf_override             ? *params.psf_override
              : params.psf_sigma              ? gaussian_psf(*params.psf_sigma, params.psf_size)
                                              : estimate_psf_blind(img, params);
    psf.validate();
    switch (params.method) {
        case DeblurMethod::richardson_lucy:
            return richardson_lucy(img, psf, params.rl_iterations);
        case DeblurMethod::wiener:
        default:
            return wiener_deconvolve(img, psf, params.nsr);
    }
}

}  // namespace turbmit::deblur
