#pragma once

#include <filesystem>
#include <vector>

#include "turbmit/image.hpp"

namespace turbmit::flow {

struct FlowParams {
    int pyramid_levels = 4;
    int iterations_per_level = 10;
    int window_radius = 7;
    double smoothing_sigma = 1.0;
    // 0 means auto: min(width, height) / 4.
    double max_displacement = 0.0;
};

// Per-pixel mean over the sequence.
GrayImage build_reference(const FrameSequence& seq);

// Dense coarse-to-fine Lucas-Kanade. The returned flow maps reference
// coordinates into moving-image coordinates, so warp(moving, flow) aligns the
// moving image onto the reference. A constant reference yields zero flow with
// the low_texture flag set.
FlowField estimate_flow(const GrayImage& moving, const GrayImage& reference,
                        const FlowParams& params);

// Backward warp with bilinear sampling, edge clamp, output clamped to [0,1].
GrayImage warp(const GrayImage& img, const FlowField& flow);

struct RegistrationResult {
    FrameSequence frames;          // registered sequence, acquisition order
    std::vector<FlowField> flows;  // final flow per original frame
    GrayImage reference;           // reference the final pass aligned to
};

// Aligns every frame to a mean reference. Passes beyond the first rebuild the
// reference from the registered frames and re-estimate flow from the original
// frames, so each output pixel is interpolated exactly once.
RegistrationResult register_sequence(const FrameSequence& seq, const FlowParams& params,
                                     int refinement_passes = 2);

// Debug raster: u32 width, u32 height, then the dx and dy float32 planes,
// all little-endian.
void save_flow(const FlowField& flow, const std::filesystem::path& path);
FlowField load_flow(const std::filesystem::path& path);

}  // namespace turbmit::flow
