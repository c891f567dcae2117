#pragma once

#include <string>
#include <vector>

#include "pxlm/render.hpp"

namespace pxlm {

// Binary PBM (P4): 1 = black ink. Rows are packed MSB-first per byte.
void write_pbm(const std::string& path, const Strip& strip);
Strip read_pbm(const std::string& path);

// Binary PGM (P5), maxval 255; pixels row-major, one byte each.
void write_pgm(const std::string& path, int width, int height, const std::vector<uint8_t>& pixels);

}  // namespace pxlm
