#pragma once

namespace csbs {

// Selects between the OpenMP kernels and the serial reference kernels. Both
// produce bit-identical results; the serial path exists for testing and
// benchmarking.
enum class Exec { serial, parallel };

// Largest number of spectral sources supported by the per-frequency block
// solvers (blocks live on the stack).
inline constexpr int kMaxSources = 8;

}  // namespace csbs
