#pragma once

#include <cstdint>
#include <vector>

namespace turbmit {

// Single-channel raster, row-major, nominal range [0,1]. Pipeline stages keep
// values in floating point and clamp only at I/O boundaries; deconvolution is
// allowed to run transiently out of range.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // width*height values

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    size_t size() const { return data.size(); }
    bool same_shape(const GrayImage& other) const {
        return width == other.width && height == other.height;
    }
};

// Acquisition-ordered frames; all frames must share one shape.
using FrameSequence = std::vector<GrayImage>;

// Per-pixel backward-warp displacement map: the registered value at (x,y) is
// sampled from the source image at (x + dx, y + dy).
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> dx;
    std::vector<float> dy;
    // Set when the image pair had no usable texture; flow is all zero then.
    bool low_texture = false;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h),
          dx(static_cast<size_t>(w) * h, 0.0f),
          dy(static_cast<size_t>(w) * h, 0.0f) {}

    size_t size() const { return dx.size(); }
};

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

}  // namespace turbmit
