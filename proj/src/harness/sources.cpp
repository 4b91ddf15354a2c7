#include "csbs/harness/sources.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "csbs/harness/image_io.hpp"

namespace csbs::harness {

namespace {

enum class Shape { disk, rectangle, triangle };

struct Placement {
  Shape shape;
  double cy, cx, size, aspect, angle;
};

bool inside(const Placement& p, double y, double x) {
  const double dy = y - p.cy, dx = x - p.cx;
  switch (p.shape) {
    case Shape::disk:
      return dy * dy + dx * dx <= p.size * p.size;
    case Shape::rectangle: {
      const double u = std::cos(p.angle) * dx + std::sin(p.angle) * dy;
      const double v = -std::sin(p.angle) * dx + std::cos(p.angle) * dy;
      return std::abs(u) <= p.size && std::abs(v) <= p.size * p.aspect;
    }
    case Shape::triangle: {
      // Equilateral triangle of circumradius `size`, rotated by `angle`.
      for (int k = 0; k < 3; ++k) {
        const double a = p.angle + 2.0 * std::numbers::pi * k / 3.0;
        if (std::cos(a) * dx + std::sin(a) * dy > 0.5 * p.size) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

SourceCube shapes_source(int sources, int side, int shapes_per_source, double background,
                         std::uint64_t seed) {
  if (sources < 1) throw std::invalid_argument("shapes_source: need at least one source");
  if (side < 8) throw std::invalid_argument("shapes_source: image side must be at least 8");
  if (shapes_per_source < 1) throw std::invalid_argument("shapes_source: need at least one shape");
  if (!(background >= 0.0) || background >= 0.5)
    throw std::invalid_argument("shapes_source: background must be in [0, 0.5)");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> owner(static_cast<std::size_t>(side) * side, -1);

  SourceCube cube;
  cube.images.assign(static_cast<std::size_t>(sources), Image(side, side));
  // Smooth periodic background in [0, background] so no SSIM window of the
  // truth is flat.
  if (background > 0.0)
    for (auto& im : cube.images) {
      double phase[3], fy[3], fx[3];
      for (int k = 0; k < 3; ++k) {
        fy[k] = std::floor(1.0 + 3.0 * unit(rng));
        fx[k] = std::floor(1.0 + 3.0 * unit(rng));
        phase[k] = 2.0 * std::numbers::pi * unit(rng);
      }
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          double v = 0.0;
          for (int k = 0; k < 3; ++k)
            v += std::cos(2.0 * std::numbers::pi * (fy[k] * y + fx[k] * x) / side + phase[k]);
          im(y, x) = background * (0.5 + v / 6.0);
        }
    }
  const double margin = 0.08 * side;
  for (int k = 0; k < shapes_per_source; ++k)
    for (int s = 0; s < sources; ++s) {
      bool placed = false;
      double scale = 1.0;
      for (int attempt = 0; attempt < 400 && !placed; ++attempt) {
        if (attempt % 100 == 99) scale *= 0.7;
        Placement p;
        p.shape = static_cast<Shape>((s + k) % 3);
        p.size = scale * side * (0.07 + 0.07 * unit(rng));
        p.cy = margin + (side - 2 * margin) * unit(rng);
        p.cx = margin + (side - 2 * margin) * unit(rng);
        p.aspect = 0.4 + 0.6 * unit(rng);
        p.angle = std::numbers::pi * unit(rng);
        const double value = 0.5 + 0.5 * unit(rng);

        std::vector<std::size_t> cover;
        bool clash = false;
        for (int y = 0; y < side && !clash; ++y)
          for (int x = 0; x < side; ++x) {
            if (!inside(p, y, x)) continue;
            // One free pixel of clearance around every shape.
            for (int ny = y - 1; ny <= y + 1 && !clash; ++ny)
              for (int nx = x - 1; nx <= x + 1; ++nx)
                if (ny >= 0 && ny < side && nx >= 0 && nx < side &&
                    owner[static_cast<std::size_t>(ny) * side + nx] >= 0) {
                  clash = true;
                  break;
                }
            if (clash) break;
            cover.push_back(static_cast<std::size_t>(y) * side + x);
          }
        if (clash || cover.size() < 4) continue;
        for (std::size_t i : cover) {
          owner[i] = s;
          cube.images[static_cast<std::size_t>(s)].pixels[i] = value;
        }
        placed = true;
      }
      if (!placed)
        throw std::runtime_error("shapes_source: could not place " + std::to_string(shapes_per_source) +
                                 " disjoint shapes per source in a " + std::to_string(side) +
                                 " pixel image");
    }
  return cube;
}

SourceCube load_sources(std::span<const std::string> files, int side) {
  SourceCube cube;
  for (const auto& f : files) {
    Image im = read_image(f);
    if (im.rows != side || im.cols != side)
      throw std::runtime_error("source '" + f + "' is " + std::to_string(im.rows) + "x" +
                               std::to_string(im.cols) + ", expected " + std::to_string(side) + "x" +
                               std::to_string(side));
    cube.images.push_back(std::move(im));
  }
  return cube;
}

}  // namespace csbs::harness
