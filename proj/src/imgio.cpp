#include "turbmit/imgio.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <vector>

#include "turbmit/errors.hpp"

namespace fs = std::filesystem;

namespace turbmit::imgio {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

// ---- PGM ----------------------------------------------------------------

// Reads the next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::FILE* f) {
    std::string tok;
    int c;
    while ((c = std::fgetc(f)) != EOF) {
        if (c == '#') {
            while ((c = std::fgetc(f)) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = std::fgetc(f)) != EOF && !std::isspace(c) && c != '#')
                tok.push_back(static_cast<char>(c));
            if (c == '#') std::ungetc(c, f);
            return tok;
        }
    }
    return tok;
}

long pgm_int(std::FILE* f, const fs::path& path) {
    const std::string tok = pgm_token(f);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        throw DataError("corrupt PGM header: " + path.string());
    return std::stol(tok);
}

GrayImage load_pgm(std::FILE* f, bool ascii, const fs::path& path) {
    const long w = pgm_int(f, path);
    const long h = pgm_int(f, path);
    const long maxval = pgm_int(f, path);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
        throw DataError("corrupt PGM header: " + path.string());

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    const double scale = 1.0 / static_cast<double>(maxval);
    const size_t count = img.size();

    if (ascii) {
        for (size_t i = 0; i < count; ++i) {
            const long v = pgm_int(f, path);
            if (v > maxval) throw DataError("PGM sample exceeds maxval: " + path.string());
            img.data[i] = static_cast<float>(v * scale);
        }
        return img;
    }

    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes);
    if (std::fread(raw.data(), 1, raw.size(), f) != raw.size())
        throw DataError("truncated PGM data: " + path.string());
    if (bytes == 1) {
        for (size_t i = 0; i < count; ++i) img.data[i] = static_cast<float>(raw[i] * scale);
    } else {
        for (size_t i = 0; i < count; ++i) {
            const unsigned v = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
            img.data[i] = static_cast<float>(v * scale);
        }
    }
    return img;
}

// ---- PNG ----------------------------------------------------------------

GrayImage load_png(std::FILE* f, const fs::path& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed");
    }

    std::vector<png_byte> storage;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("corrupt PNG: " + path.string());
    }

    png_init_io(png, f);
    png_set_sig_bytes(png, 8);  // magic already consumed by the sniffer
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("unsupported PNG channel layout: " + path.string());
    }

    const size_t row_bytes = png_get_rowbytes(png, info);
    storage.resize(row_bytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = storage.data() + row_bytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    const double scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (png_uint_32 y = 0; y < h; ++y) {
        const png_byte* row = storage.data() + row_bytes * y;
        for (png_uint_32 x = 0; x < w; ++x) {
            double value;
            if (channels == 1) {
                value = depth == 16
                            ? static_cast<double>((row[2 * x] << 8) | row[2 * x + 1])
                            : static_cast<double>(row[x]);
            } else {
                double r, g, b;
                if (depth == 16) {
                    const png_byte* p = row + 6 * x;
                    r = (p[0] << 8) | p[1];
                    g = (p[2] << 8) | p[3];
                    b = (p[4] << 8) | p[5];
                } else {
                    const png_byte* p = row + 3 * x;
                    r = p[0];
                    g = p[1];
                    b = p[2];
                }
                value = kLumaR * r + kLumaG * g + kLumaB * b;
            }
            img.at(static_cast<int>(x), static_cast<int>(y)) =
                static_cast<float>(value * scale);
        }
    }
    return img;
}

}  // namespace

GrayImage load_image(const fs::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw IoError("cannot open image: " + path.string());

    unsigned char magic[8] = {};
    const size_t got = std::fread(magic, 1, sizeof magic, f.get());
    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return load_png(f.get(), path);
    if (got >= 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2')) {
        std::fseek(f.get(), 2, SEEK_SET);
        return load_pgm(f.get(), magic[1] == '2', path);
    }
    throw FormatError("unsupported image format: " + path.string());
}

void save_image(const GrayImage& img, const fs::path& path) {
    if (img.width < 1 || img.height < 1) throw DataError("save_image: empty image");
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) throw IoError("cannot write image: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }

    std::vector<png_byte> bytes(img.size());
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG write failed: " + path.string());
    }

    for (size_t i = 0; i < img.size(); ++i)
        bytes[i] = static_cast<png_byte>(std::lround(clamp01(img.data[i]) * 255.0f));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<size_t>(y)] = bytes.data() + static_cast<size_t>(y) * img.width;

    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

FrameSequence load_sequence(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());

    static const std::regex frame_name(R"(frame_(\d{4})\.(png|pgm))");
    std::map<int, fs::path> indexed;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, frame_name))
            indexed.emplace(std::stoi(m[1].str()), entry.path());
    }
    if (indexed.empty()) throw DataError("no frame_%04d files in " + dir.string());

    FrameSequence seq;
    seq.reserve(indexed.size());
    int expected = 0;
    for (const auto& [idx, path] : indexed) {
        if (idx != expected)
            throw DataError("frame index gap in " + dir.string() + ": expected frame " +
                            std::to_string(expected) + ", found " + std::to_string(idx));
        ++expected;
        seq.push_back(load_image(path));
        if (!seq.back().same_shape(seq.front()))
            throw DataError("frame shape mismatch at " + path.string());
    }
    return seq;
}

void save_raw_f32(const GrayImage& img, const fs::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) throw IoError("cannot write raster: " + path.string());
    const uint32_t wh[2] = {static_cast<uint32_t>(img.width), static_cast<uint32_t>(img.height)};
    if (std::fwrite(wh, sizeof wh, 1, f.get()) != 1 ||
        std::fwrite(img.data.data(), sizeof(float), img.size(), f.get()) != img.size())
        throw IoError("raster write failed: " + path.string());
}

GrayImage load_raw_f32(const fs::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw IoError("cannot open raster: " + path.string());
    uint32_t wh[2];
    if (std::fread(wh, sizeof wh, 1, f.get()) != 1 || wh[0] == 0 || wh[1] == 0)
        throw DataError("corrupt raster header: " + path.string());
    GrayImage img(static_cast<int>(wh[0]), static_cast<int>(wh[1]));
    if (std::fread(img.data.data(), sizeof(float), img.size(), f.get()) != img.size())
        throw DataError("truncated raster: " + path.string());
    return img;
}

}  // namespace turbmit::imgio
