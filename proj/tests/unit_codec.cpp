#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "test_images.hpp"
#include "turbmit/codec.hpp"
#include "turbmit/errors.hpp"
#include "turbmit/kernels.hpp"

using namespace turbmit;
using namespace turbmit::testsupport;

namespace {

codec::CodedTarget target_with(std::vector<uint8_t> payload) {
    codec::CodedTarget t;
    t.payload = std::move(payload);
    return t;
}

}  // namespace

TEST_CASE("all-zero payload renders an all-white image") {
    const auto t = target_with(std::vector<uint8_t>(64, 0));
    const GrayImage img = codec::generate_target(t);
    CHECK(img.width == 8 * 16 + 2 * 32);
    CHECK(img.height == img.width);
    for (const float v : img.data) CHECK(v == 1.0f);
}

TEST_CASE("checkerboard payload renders alternating cells") {
    std::vector<uint8_t> bits(64);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) bits[static_cast<size_t>(r) * 8 + c] = (r + c) % 2;
    const auto t = target_with(bits);
    const GrayImage img = codec::generate_target(t);
    // Centers of the first two cells in the top row.
    CHECK(img.at(32 + 8, 32 + 8) == 1.0f);   // bit 0 -> white
    CHECK(img.at(32 + 24, 32 + 8) == 0.0f);  // bit 1 -> black
    // Quiet border stays white.
    CHECK(img.at(0, 0) == 1.0f);
    CHECK(img.at(16, img.height - 1) == 1.0f);
}

TEST_CASE("decode inverts generate for random payloads") {
    Rng rng(77);
    for (int trial = 0; trial < 120; ++trial) {
        const auto t = target_with(codec::random_payload(8, 8, rng));
        const GrayImage img = codec::generate_target(t);
        CHECK(codec::decode_target(img, t) == t.payload);
    }
}

TEST_CASE("decode survives positive affine intensity maps") {
    Rng rng(78);
    const auto t = target_with(codec::random_payload(8, 8, rng));
    const GrayImage img = codec::generate_target(t);
    for (const auto [gain, offset] : {std::pair{0.4f, 0.3f}, {0.05f, 0.9f}, {0.7f, 0.0f}}) {
        GrayImage mapped = img;
        for (auto& v : mapped.data) v = offset + gain * v;
        CHECK(codec::decode_target(mapped, t) == t.payload);
    }
}

TEST_CASE("decode is total on heavily blurred targets") {
    Rng rng(79);
    const auto t = target_with(codec::random_payload(8, 8, rng));
    const GrayImage blurred =
        kernels::gaussian_blur(codec::generate_target(t), t.cell_px / 2.0);
    const auto bits = codec::decode_target(blurred, t);
    CHECK(bits.size() == 64);
}

TEST_CASE("decode validates the image geometry") {
    const auto t = target_with(std::vector<uint8_t>(64, 0));
    CHECK_THROWS_AS(codec::decode_target(GrayImage(100, 100, 1.0f), t), DataError);
}

TEST_CASE("bit_score arithmetic") {
    const std::vector<uint8_t> truth(64, 1);
    CHECK(codec::bit_score(truth, truth) == 1.0);

    std::vector<uint8_t> complement(64, 0);
    CHECK(codec::bit_score(complement, truth) == 0.0);

    std::vector<uint8_t> eight_wrong = truth;
    for (int i = 0; i < 8; ++i) eight_wrong[static_cast<size_t>(i) * 7] = 0;
    CHECK(codec::bit_score(eight_wrong, truth) == doctest::Approx(0.875));

    // Symmetric, and equal to 1 - normalized Hamming distance.
    Rng rng(80);
    const auto a = codec::random_payload(8, 8, rng);
    const auto b = codec::random_payload(8, 8, rng);
    CHECK(codec::bit_score(a, b) == codec::bit_score(b, a));
    size_t hamming = 0;
    for (size_t i = 0; i < a.size(); ++i) hamming += a[i] != b[i];
    CHECK(codec::bit_score(a, b) ==
          doctest::Approx(1.0 - static_cast<double>(hamming) / 64.0));

    CHECK_THROWS_AS(codec::bit_score(a, std::vector<uint8_t>(32, 0)), DataError);
}

TEST_CASE("payload files round trip") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() /
                          ("turbmit_payload_" + std::to_string(::getpid()) + ".txt");
    Rng rng(81);
    const auto bits = codec::random_payload(8, 8, rng);
    codec::save_payload(bits, path);
    CHECK(codec::load_payload(path) == bits);
    fs::remove(path);

    std::ofstream(path) << "0101x10\n";
    CHECK_THROWS_AS(codec::load_payload(path), DataError);
    fs::remove(path);
}

TEST_CASE("target validation rejects bad geometry") {
    codec::CodedTarget bad;
    bad.payload.assign(64, 0);
    bad.rows = 1;
    CHECK_THROWS_AS(codec::generate_target(bad), DataError);
    bad.rows = 8;
    bad.cell_px = 2;
    CHECK_THROWS_AS(codec::generate_target(bad), DataError);
    bad.cell_px = 16;
    bad.payload.resize(63);
    CHECK_THROWS_AS(codec::generate_target(bad), DataError);
}
