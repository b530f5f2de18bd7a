#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "turbmit/image.hpp"
#include "turbmit/rng.hpp"

namespace turbmit::codec {

// Quiet-bordered binary grid pattern with known geometry, so decoding needs
// no fiducial detection and the bit score measures restoration quality only.
struct CodedTarget {
    int rows = 8;
    int cols = 8;
    int cell_px = 16;
    int quiet_border_px = 32;  // default 2 * cell_px
    std::vector<uint8_t> payload;  // rows*cols bits, row-major

    int image_width() const { return cols * cell_px + 2 * quiet_border_px; }
    int image_height() const { return rows * cell_px + 2 * quiet_border_px; }
    void validate() const;  // throws DataError
};

// Uniform random payload for a given geometry.
std::vector<uint8_t> random_payload(int rows, int cols, Rng& rng);

// Bit 1 renders as a black cell (0.0), bit 0 as white (1.0); the quiet
// border is white.
GrayImage generate_target(const CodedTarget& target);

// Per cell: mean over the central 50% x 50%, then a global threshold at the
// midpoint of Otsu's two classes over the cell means. Cell mean < threshold
// reads as bit 1. Total: always returns rows*cols bits.
std::vector<uint8_t> decode_target(const GrayImage& img, const CodedTarget& geometry);

// Fraction of equal positions, in [0,1].
double bit_score(const std::vector<uint8_t>& decoded, const std::vector<uint8_t>& truth);

// Payload file: one line of '0'/'1' characters.
void save_payload(const std::vector<uint8_t>& payload, const std::filesystem::path& path);
std::vector<uint8_t> load_payload(const std::filesystem::path& path);

}  // namespace turbmit::codec
