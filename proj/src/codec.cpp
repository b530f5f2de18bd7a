#include "turbmit/codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "turbmit/errors.hpp"

namespace turbmit::codec {

void CodedTarget::validate() const {
    if (rows < 2 || cols < 2) throw DataError("coded target: grid must be at least 2x2");
    if (cell_px < 4) throw DataError("coded target: cell_px must be >= 4");
    if (quiet_border_px < 0) throw DataError("coded target: negative quiet border");
    if (payload.size() != static_cast<size_t>(rows) * cols)
        throw DataError("coded target: payload length != rows*cols");
}

std::vector<uint8_t> random_payload(int rows, int cols, Rng& rng) {
    std::vector<uint8_t> bits(static_cast<size_t>(rows) * cols);
    for (auto& b : bits) b = rng.uniform() < 0.5 ? 0 : 1;
    return bits;
}

GrayImage generate_target(const CodedTarget& target) {
    target.validate();
    GrayImage img(target.image_width(), target.image_height(), 1.0f);
    for (int r = 0; r < target.rows; ++r)
        for (int c = 0; c < target.cols; ++c) {
            if (!target.payload[static_cast<size_t>(r) * target.cols + c]) continue;
            const int x0 = target.quiet_border_px + c * target.cell_px;
            const int y0 = target.quiet_border_px + r * target.cell_px;
            for (int y = y0; y < y0 + target.cell_px; ++y)
                for (int x = x0; x < x0 + target.cell_px; ++x) img.at(x, y) = 0.0f;
        }
    return img;
}

std::vector<uint8_t> decode_target(const GrayImage& img, const CodedTarget& geometry) {
    if (img.width != geometry.image_width() || img.height != geometry.image_height())
        throw DataError("decode_target: image does not match target geometry");

    // Cell means over the central half of each cell; boundary pixels carry
    // most of the blur and are skipped.
    const int n_cells = geometry.rows * geometry.cols;
    std::vector<double> means(static_cast<size_t>(n_cells));
    const int inset = geometry.cell_px / 4;
    for (int r = 0; r < geometry.rows; ++r)
        for (int c = 0; c < geometry.cols; ++c) {
            const int x0 = geometry.quiet_border_px + c * geometry.cell_px + inset;
            const int y0 = geometry.quiet_border_px + r * geometry.cell_px + inset;
            const int x1 = geometry.quiet_border_px + (c + 1) * geometry.cell_px - inset;
            const int y1 = geometry.quiet_border_px + (r + 1) * geometry.cell_px - inset;
            double acc = 0.0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) acc += img.at(x, y);
            means[static_cast<size_t>(r) * geometry.cols + c] =
                acc / (static_cast<double>(x1 - x0) * (y1 - y0));
        }

    // Otsu over the cell-mean population: exhaustive split maximizing the
    // between-class variance n0*n1*(mu1-mu0)^2, threshold at the class-mean
    // midpoint. Invariant under positive affine intensity maps.
    std::vector<double> sorted(means);
    std::sort(sorted.begin(), sorted.end());
    std::vector<uint8_t> bits(static_cast<size_t>(n_cells), 0);
    if (sorted.back() - sorted.front() < 1e-9) return bits;  // single class, all read as 0

    std::vector<double> prefix(sorted.size() + 1, 0.0);
    for (size_t i = 0; i < sorted.size(); ++i) prefix[i + 1] = prefix[i] + sorted[i];
    const double total = prefix.back();

    double best_variance = -1.0;
    double threshold = sorted.front();
    for (size_t k = 1; k < sorted.size(); ++k) {
        const double n0 = static_cast<double>(k);
        const double n1 = static_cast<double>(sorted.size() - k);
        const double mu0 = prefix[k] / n0;
        const double mu1 = (total - prefix[k]) / n1;
        const double variance = n0 * n1 * (mu1 - mu0) * (mu1 - mu0);
        if (variance > best_variance) {
            best_variance = variance;
            threshold = 0.5 * (mu0 + mu1);
        }
    }

    for (size_t i = 0; i < means.size(); ++i) bits[i] = means[i] < threshold ? 1 : 0;
    return bits;
}

double bit_score(const std::vector<uint8_t>& decoded, const std::vector<uint8_t>& truth) {
    if (decoded.size() != truth.size() || decoded.empty())
        throw DataError("bit_score: length mismatch");
    size_t equal = 0;
    for (size_t i = 0; i < decoded.size(); ++i)
        if ((decoded[i] != 0) == (truth[i] != 0)) ++equal;
    return static_cast<double>(equal) / static_cast<double>(decoded.size());
}

void save_payload(const std::vector<uint8_t>& payload, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write payload: " + path.string());
    for (const auto b : payload) out.put(b ? '1' : '0');
    out.put('\n');
    if (!out) throw IoError("payload write failed: " + path.string());
}

std::vector<uint8_t> load_payload(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open payload: " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<uint8_t> bits;
    bits.reserve(line.size());
    for (const char c : line) {
        if (c == '0') bits.push_back(0);
        else if (c == '1') bits.push_back(1);
        else if (!std::isspace(static_cast<unsigned char>(c)))
            throw DataError("payload file has non-bit characters: " + path.string());
    }
    if (bits.empty()) throw DataError("empty payload file: " + path.string());
    return bits;
}

}  // namespace turbmit::codec
