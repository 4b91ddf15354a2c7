#pragma once

// Image artifacts. PNGs are 8-bit grayscale, min-max normalized for display,
// with a JSON sidecar holding the normalization; raw files are the data of
// record:
//   bytes 0-7   "CSBSRAW1"
//   int32       rows, cols (little-endian)
//   float64     rows * cols values, row-major

#include <string>
#include <vector>

#include "csbs/image.hpp"

namespace csbs::harness {

// Writes `<stem>.png`, `<stem>.png.json` and `<stem>.raw`.
void write_image_artifacts(const std::string& stem, const Image& image);

void write_png(const std::string& path, const Image& image);
void write_raw(const std::string& path, const Image& image);
Image read_raw(const std::string& path);

// Grayscale or RGB(A) PNG of any bit depth; color is averaged, values are
// scaled to [0, 1].
Image read_png(const std::string& path);

// Picks read_raw or read_png from the extension.
Image read_image(const std::string& path);

// Shortest text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace csbs::harness
