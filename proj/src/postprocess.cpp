#include "turbmit/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "turbmit/errors.hpp"
#include "turbmit/kernels.hpp"

namespace turbmit::postprocess {

double percentile(const GrayImage& img, double pct) {
    if (img.data.empty()) throw DataError("percentile: empty image");
    std::vector<float> sorted(img.data);
    std::sort(sorted.begin(), sorted.end());
    const double rank = pct / 100.0 * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(rank);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (static_cast<double>(sorted[hi]) - sorted[lo]);
}

GrayImage contrast_stretch(const GrayImage& img, double low_pct, double high_pct) {
    if (!(low_pct < high_pct) || low_pct < 0.0 || high_pct > 100.0)
        throw DataError("contrast_stretch: need 0 <= low < high <= 100");
    const double p_low = percentile(img, low_pct);
    const double p_high = percentile(img, high_pct);
    if (p_high - p_low < 1e-6) return img;

    GrayImage out(img.width, img.height);
    const float offset = static_cast<float>(p_low);
    const float gain = static_cast<float>(1.0 / (p_high - p_low));
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(img.size()); ++i)
        out.data[i] = clamp01((img.data[i] - offset) * gain);
    return out;
}

GrayImage suppress_ringing(const GrayImage& deblurred, const GrayImage& guide,
                           double blend, int radius) {
    if (!deblurred.same_shape(guide)) throw DataError("suppress_ringing: shape mismatch");
    if (blend < 0.0 || blend > 1.0) throw DataError("suppress_ringing: blend must be in [0,1]");
    if (blend == 0.0) return deblurred;

    const auto [env_min, env_max] = kernels::local_min_max(guide, radius);
    GrayImage out(deblurred.width, deblurred.height);
    const float b = static_cast<float>(blend);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(out.size()); ++i) {
        const float v = deblurred.data[i];
        const float over = std::max(0.0f, v - env_max.data[i]);
        const float under = std::min(0.0f, v - env_min.data[i]);
        out.data[i] = v - b * (over + under);
    }
    return out;
}

GrayImage postprocess(const GrayImage& img, const GrayImage& guide,
                      const PostprocessParams& params) {
    if (!img.same_shape(guide)) throw DataError("postprocess: shape mismatch");
    GrayImage result = img;
    if (params.enable_ringing)
        result = suppress_ringing(result, guide, params.ringing_guide_blend,
                                  params.ringing_radius);
    if (params.enable_stretch)
        result = contrast_stretch(result, params.stretch_low_percentile,
                                  params.stretch_high_percentile);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(result.size()); ++i)
        result.data[i] = clamp01(result.data[i]);
    return result;
}

}  // namespace turbmit::postprocess
