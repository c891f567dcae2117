#include "pxlm/image_io.hpp"

#include <fstream>

#include "pxlm/common.hpp"

namespace pxlm {

void write_pbm(const std::string& path, const Strip& strip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for write: " + path);
    out << "P4\n" << strip.width << " " << Strip::kHeight << "\n";
    const int row_bytes = (strip.width + 7) / 8;
    for (int r = 0; r < Strip::kHeight; ++r) {
        std::vector<uint8_t> row(static_cast<size_t>(row_bytes), 0);
        for (int c = 0; c < strip.width; ++c)
            if (strip.at(r, c)) row[static_cast<size_t>(c / 8)] |= static_cast<uint8_t>(0x80u >> (c % 8));
        out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
    }
    if (!out) throw DataError("write failed: " + path);
}

Strip read_pbm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image: " + path);
    std::string magic;
    int w = 0, h = 0;
    in >> magic >> w >> h;
    if (magic != "P4" || w <= 0 || h != Strip::kHeight)
        throw DataError(path + ": expected a binary PBM of height 8");
    in.get();  // single whitespace after the header
    Strip s(w);
    const int row_bytes = (w + 7) / 8;
    std::vector<char> row(static_cast<size_t>(row_bytes));
    for (int r = 0; r < h; ++r) {
        in.read(row.data(), row_bytes);
        if (in.gcount() != row_bytes) throw DataError(path + ": truncated pixel rows");
        for (int c = 0; c < w; ++c)
            s.set(r, c, (static_cast<uint8_t>(row[static_cast<size_t>(c / 8)]) >> (7 - c % 8)) & 1);
    }
    return s;
}

void write_pgm(const std::string& path, int width, int height, const std::vector<uint8_t>& pixels) {
    if (pixels.size() != static_cast<size_t>(width) * static_cast<size_t>(height))
        throw DataError("pgm: pixel buffer does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for write: " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace pxlm
