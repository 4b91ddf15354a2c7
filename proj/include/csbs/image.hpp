#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace csbs {

// Row-major real image.
struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int r, int c, double fill = 0.0)
      : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }

  std::size_t size() const { return pixels.size(); }
  std::span<const double> view() const { return pixels; }
};

}  // namespace csbs
