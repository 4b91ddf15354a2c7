#pragma once

// Per-frequency kernels. `serial` is the reference implementation; `omp`
// splits the frequency loop across OpenMP threads. Every frequency is
// computed by the same block routine in both, so outputs are bit-identical.

#include <cstddef>
#include <limits>
#include <span>

#include "csbs/spectral.hpp"

namespace csbs::kernels {

inline constexpr std::size_t kNoFailure = std::numeric_limits<std::size_t>::max();

#define CSBS_KERNEL_DECLS                                                                  \
  /* out(w) += weight * conj(a_s(w)) a_s'(w); slices[s] points at N*N values. */           \
  void outer_accumulate(std::span<const cd* const> slices, double weight, BlockField& out); \
  /* gram(w) <- hermitize(gram(w) +/- contribution(w)). */                                 \
  void update_blocks(BlockField& gram, const BlockField& contribution, bool subtract);      \
  /* terms[w] = tr((hermitize(gram(w) - removed(w)) + lambda prior(w))^-1). */             \
  /* Returns the lowest failing frequency or kNoFailure. */                                \
  std::size_t trace_terms(const BlockField& gram, const BlockField* removed,               \
                          const BlockField& prior, double lambda, std::span<double> terms); \
  /* rhs(w) <- (gram(w) + lambda prior(w))^-1 rhs(w), S values per frequency. */           \
  std::size_t solve_blocks(const BlockField& gram, const BlockField& prior, double lambda,  \
                           std::span<cd> rhs);

namespace serial {
CSBS_KERNEL_DECLS
}
namespace omp {
CSBS_KERNEL_DECLS
}

#undef CSBS_KERNEL_DECLS

// Fixed left-to-right summation so totals never depend on the schedule.
inline double ordered_sum(std::span<const double> terms) {
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

}  // namespace csbs::kernels
