#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "planarflow/grid.hpp"

namespace planarflow::png {

// Minimal PNG encoder (zlib-compressed, 8-bit). Enough for frame dumps, flow
// visualizations and plot emission; no reading support.
std::vector<std::uint8_t> encode_gray(const std::vector<std::uint8_t>& pixels, int width,
                                      int height);
std::vector<std::uint8_t> encode_rgb(const std::vector<std::uint8_t>& pixels, int width,
                                     int height);

// Clamps [0,1] intensities to 8 bits and encodes.
std::vector<std::uint8_t> encode_grid(const Grid& g);

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

std::string base64(const std::vector<std::uint8_t>& bytes);

} // namespace planarflow::png
