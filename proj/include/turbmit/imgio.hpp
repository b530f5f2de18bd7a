#pragma once

#include <filesystem>

#include "turbmit/image.hpp"

namespace turbmit::imgio {

// Reads an 8/16-bit grayscale or RGB image (PNG or binary/ASCII PGM, sniffed
// by magic bytes). Samples are scaled to [0,1] by the format's max code
// value; RGB collapses to BT.601 luma (0.299 R + 0.587 G + 0.114 B).
// Throws IoError (missing/unreadable), FormatError (not PNG/PGM),
// DataError (corrupt header or truncated data).
GrayImage load_image(const std::filesystem::path& path);

// Writes an 8-bit grayscale PNG; v is stored as round(clamp(v,0,1)*255).
void save_image(const GrayImage& img, const std::filesystem::path& path);

// Loads `frame_%04d.png|pgm` starting at index 0. Indices must be contiguous
// and frames shape-homogeneous.
FrameSequence load_sequence(const std::filesystem::path& dir);

// Raw float32 raster (little-endian u32 width/height header + samples),
// used to round-trip stage artifacts without 8-bit quantization.
void save_raw_f32(const GrayImage& img, const std::filesystem::path& path);
GrayImage load_raw_f32(const std::filesystem::path& path);

}  // namespace turbmit::imgio
