#pragma once

#include <string>

#include "csbs/harness/config.hpp"

namespace csbs::harness {

struct SweepResult;

// One panel per (S, SNR) pair, rows by S and columns by SNR; each panel plots
// mean SSIM against separation in DOF for CSBS (orange) and the focal-plane
// baseline (blue).
std::string sweep_svg(const SweepResult& result, const SweepConfig& axes);

}  // namespace csbs::harness
