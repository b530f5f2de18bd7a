#pragma once

#include <vector>

#include "turbmit/image.hpp"

namespace turbmit::selection {

struct SharpnessScore {
    size_t frame_index = 0;
    double score = 0.0;
};

struct SelectionParams {
    double keep_fraction = 0.5;  // (0, 1]
    int min_keep = 8;
};

// Tenengrad focus measure: mean of Gx^2 + Gy^2 over interior pixels, where
// Gx, Gy are the 3x3 Sobel derivative estimates (1/8-normalized taps). Zero
// iff the image is constant. Requires width, height >= 3.
double sharpness(const GrayImage& img);

// Scores every frame, sorted by descending sharpness; ties break toward the
// lower frame index.
std::vector<SharpnessScore> rank_frames(const FrameSequence& seq);

// Averages the K = max(min_keep, round(keep_fraction * N)) sharpest frames,
// K clamped to N.
GrayImage select_and_average(const FrameSequence& seq, const SelectionParams& params);

}  // namespace turbmit::selection
