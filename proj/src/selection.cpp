#include "turbmit/selection.hpp"

#include <algorithm>
#include <cmath>

#include "turbmit/errors.hpp"
#include "turbmit/kernels.hpp"

namespace turbmit::selection {

double sharpness(const GrayImage& img) {
    if (img.width < 3 || img.height < 3)
        throw DataError("sharpness: image smaller than 3x3");
    const double interior =
        static_cast<double>(img.width - 2) * static_cast<double>(img.height - 2);
    return kernels::tenengrad_sum(img) / interior;
}

std::vector<SharpnessScore> rank_frames(const FrameSequence& seq) {
    if (seq.empty()) throw DataError("rank_frames: empty sequence");
    std::vector<SharpnessScore> scores(seq.size());
    for (size_t i = 0; i < seq.size(); ++i) scores[i] = {i, sharpness(seq[i])};
    std::stable_sort(scores.begin(), scores.end(),
                     [](const SharpnessScore& a, const SharpnessScore& b) {
                         return a.score > b.score;
                     });
    return scores;
}

GrayImage select_and_average(const FrameSequence& seq, const SelectionParams& params) {
    if (seq.empty()) throw DataError("select_and_average: empty sequence");
    if (params.keep_fraction <= 0.0 || params.keep_fraction > 1.0)
        throw DataError("select_and_average: keep_fraction must be in (0,1]");

    const auto ranked = rank_frames(seq);
    const size_t n = seq.size();
    size_t keep = static_cast<size_t>(
        std::lround(params.keep_fraction * static_cast<double>(n)));
    keep = std::max<size_t>(keep, static_cast<size_t>(std::max(params.min_keep, 1)));
    keep = std::min(keep, n);

    GrayImage fused(seq.front().width, seq.front().height);
    const double inv_k = 1.0 / static_cast<double>(keep);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(fused.size()); ++i) {
        double acc = 0.0;
        for (size_t k = 0; k < keep; ++k) acc += seq[ranked[k].frame_index].data[i];
        fused.data[i] = static_cast<float>(acc * inv_k);
    }
    return fused;
}

}  // namespace turbmit::selection
