#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csbs/inverse.hpp"

namespace csbs::harness {

// S images of flat-intensity geometric shapes (disks, rectangles, triangles,
// values in [0.5, 1]) over a smooth periodic background of peak `background`.
// Shapes never overlap, within or across sources.
SourceCube shapes_source(int sources, int side, int shapes_per_source, double background,
                         std::uint64_t seed);

// One grayscale image per source, each `side` x `side`.
SourceCube load_sources(std::span<const std::string> files, int side);

}  // namespace csbs::harness
