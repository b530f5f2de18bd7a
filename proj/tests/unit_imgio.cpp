#include <doctest.h>
#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <vector>

#include "test_images.hpp"
#include "turbmit/errors.hpp"
#include "turbmit/imgio.hpp"
#include "turbmit/rng.hpp"

using namespace turbmit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("turbmit_imgio_" + std::to_string(::getpid()) +
                                            "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

void write_pgm8(const fs::path& p, int w, int h, const std::vector<unsigned char>& px) {
    std::ofstream out(p, std::ios::binary);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

void write_pgm16(const fs::path& p, int w, int h, const std::vector<uint16_t>& px) {
    std::ofstream out(p, std::ios::binary);
    out << "P5\n" << w << " " << h << "\n65535\n";
    for (const uint16_t v : px) {
        out.put(static_cast<char>(v >> 8));
        out.put(static_cast<char>(v & 0xFF));
    }
}

// Minimal RGB8 PNG writer for fixture images.
void write_rgb_png(const fs::path& p, int w, int h, const std::vector<unsigned char>& rgb) {
    std::FILE* f = std::fopen(p.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, f);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<size_t>(y)] =
            const_cast<png_bytep>(rgb.data() + static_cast<size_t>(y) * w * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

}  // namespace

TEST_CASE("8-bit PGM scales by 255") {
    TempDir tmp;
    write_pgm8(tmp.path / "a.pgm", 3, 2, {255, 255, 255, 255, 255, 255});
    const GrayImage all_white = imgio::load_image(tmp.path / "a.pgm");
    CHECK(all_white.width == 3);
    CHECK(all_white.height == 2);
    for (const float v : all_white.data) CHECK(v == 1.0f);

    write_pgm8(tmp.path / "b.pgm", 1, 1, {128});
    CHECK(imgio::load_image(tmp.path / "b.pgm").data[0] ==
          doctest::Approx(128.0 / 255.0).epsilon(1e-6));
}

TEST_CASE("16-bit PGM scales by 65535") {
    TempDir tmp;
    write_pgm16(tmp.path / "w.pgm", 2, 1, {65535, 32768});
    const GrayImage img = imgio::load_image(tmp.path / "w.pgm");
    CHECK(img.data[0] == 1.0f);
    CHECK(img.data[1] == doctest::Approx(32768.0 / 65535.0).epsilon(1e-6));
}

TEST_CASE("ASCII PGM is accepted") {
    TempDir tmp;
    std::ofstream out(tmp.path / "a.pgm");
    out << "P2\n# comment\n2 2\n255\n0 255\n128 64\n";
    out.close();
    const GrayImage img = imgio::load_image(tmp.path / "a.pgm");
    CHECK(img.data[0] == 0.0f);
    CHECK(img.data[1] == 1.0f);
    CHECK(img.data[2] == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("RGB PNG collapses to BT.601 luma") {
    TempDir tmp;
    write_rgb_png(tmp.path / "rgb.png", 3, 1,
                  {255, 0, 0 /*red*/, 0, 255, 0 /*green*/, 0, 0, 255 /*blue*/});
    const GrayImage img = imgio::load_image(tmp.path / "rgb.png");
    CHECK(img.data[0] == doctest::Approx(0.299).epsilon(1e-6));
    CHECK(img.data[1] == doctest::Approx(0.587).epsilon(1e-6));
    CHECK(img.data[2] == doctest::Approx(0.114).epsilon(1e-6));
}

TEST_CASE("save/load round trip is within the 8-bit quantization bound") {
    TempDir tmp;
    const GrayImage img = testsupport::textured_chart(64, 48, 5);
    imgio::save_image(img, tmp.path / "chart.png");
    const GrayImage back = imgio::load_image(tmp.path / "chart.png");
    REQUIRE(back.same_shape(img));
    CHECK(testsupport::max_abs_diff(img, back) <= 1.0 / 255.0 + 1e-9);
}

TEST_CASE("saving clamps out-of-range values") {
    TempDir tmp;
    GrayImage img(2, 1);
    img.data = {1.0f, -0.2f};
    imgio::save_image(img, tmp.path / "clamped.png");
    const GrayImage back = imgio::load_image(tmp.path / "clamped.png");
    CHECK(back.data[0] == 1.0f);  // stored 255
    CHECK(back.data[1] == 0.0f);  // stored 0
}

TEST_CASE("load errors are reported distinctly") {
    TempDir tmp;
    CHECK_THROWS_AS(imgio::load_image(tmp.path / "absent.png"), IoError);

    std::ofstream(tmp.path / "junk.dat") << "this is not an image at all";
    CHECK_THROWS_AS(imgio::load_image(tmp.path / "junk.dat"), FormatError);

    // Valid PNG magic, corrupt stream.
    std::ofstream corrupt(tmp.path / "bad.png", std::ios::binary);
    const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    corrupt.write(reinterpret_cast<const char*>(sig), 8);
    corrupt << "garbage garbage garbage";
    corrupt.close();
    CHECK_THROWS_AS(imgio::load_image(tmp.path / "bad.png"), DataError);

    // PGM with a nonsense header token.
    std::ofstream(tmp.path / "bad.pgm") << "P5\nnot_a_number 4\n255\n";
    CHECK_THROWS_AS(imgio::load_image(tmp.path / "bad.pgm"), DataError);
}

TEST_CASE("load_sequence orders, validates, and matches per-file loads") {
    TempDir tmp;
    Rng rng(11);
    std::vector<GrayImage> frames;
    for (int i = 0; i < 12; ++i) {
        GrayImage f(16, 16);
        for (auto& v : f.data) v = static_cast<float>(rng.uniform());
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.png", i);
        imgio::save_image(f, tmp.path / name);
        frames.push_back(std::move(f));
    }
    const FrameSequence seq = imgio::load_sequence(tmp.path);
    REQUIRE(seq.size() == 12);
    for (int i = 0; i < 12; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.png", i);
        const GrayImage solo = imgio::load_image(tmp.path / name);
        CHECK(testsupport::max_abs_diff(seq[static_cast<size_t>(i)], solo) == 0.0);
    }
}

TEST_CASE("load_sequence rejects gaps, shape mismatches, and empty dirs") {
    TempDir tmp;
    CHECK_THROWS_AS(imgio::load_sequence(tmp.path), DataError);
    CHECK_THROWS_AS(imgio::load_sequence(tmp.path / "missing"), IoError);

    imgio::save_image(GrayImage(8, 8, 0.5f), tmp.path / "frame_0000.png");
    imgio::save_image(GrayImage(8, 8, 0.5f), tmp.path / "frame_0002.png");
    CHECK_THROWS_AS(imgio::load_sequence(tmp.path), DataError);

    imgio::save_image(GrayImage(4, 4, 0.5f), tmp.path / "frame_0001.png");
    CHECK_THROWS_AS(imgio::load_sequence(tmp.path), DataError);
}

TEST_CASE("raw f32 raster round trip is exact") {
    TempDir tmp;
    const GrayImage img = testsupport::textured_chart(20, 30, 3);
    imgio::save_raw_f32(img, tmp.path / "img.f32");
    const GrayImage back = imgio::load_raw_f32(tmp.path / "img.f32");
    REQUIRE(back.same_shape(img));
    CHECK(back.data == img.data);
}
