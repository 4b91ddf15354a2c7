#include "kernels/kernels.hpp"

#include <omp.h>

#include "kernels/block_ops.hpp"

namespace csbs::kernels::omp {

namespace {
// Below this many frequencies the fork/join cost outweighs the work.
constexpr std::ptrdiff_t kMinParallelFrequencies = 256;
}

void outer_accumulate(std::span<const cd* const> slices, double weight, BlockField& out) {
  const int S = out.sources();
  const auto nw = static_cast<std::ptrdiff_t>(out.frequencies());
#pragma omp parallel for schedule(static) if (nw >= kMinParallelFrequencies)
  for (std::ptrdiff_t w = 0; w < nw; ++w) {
    cd* b = out.block(static_cast<std::size_t>(w)).data();
    for (int i = 0; i < S; ++i)
      for (int j = 0; j < S; ++j) b[i * S + j] += weight * detail::conj_mul(slices[i][w], slices[j][w]);
  }
}

void update_blocks(BlockField& gram, const BlockField& contribution, bool subtract) {
  const int S = gram.sources();
  const std::size_t n = gram.block_size();
  const auto nw = static_cast<std::ptrdiff_t>(gram.frequencies());
#pragma omp parallel for schedule(static) if (nw >= kMinParallelFrequencies)
  for (std::ptrdiff_t w = 0; w < nw; ++w) {
    cd* g = gram.block(static_cast<std::size_t>(w)).data();
    const cd* c = contribution.block(static_cast<std::size_t>(w)).data();
    if (subtract) {
      for (std::size_t k = 0; k < n; ++k) g[k] = g[k] - c[k];
    } else {
      for (std::size_t k = 0; k < n; ++k) g[k] = g[k] + c[k];
    }
    detail::hermitize(g, S);
  }
}

std::size_t trace_terms(const BlockField& gram, const BlockField* removed, const BlockField& prior,
                        double lambda, std::span<double> terms) {
  const int S = gram.sources();
  const auto nw = static_cast<std::ptrdiff_t>(gram.frequencies());
  std::size_t failure = kNoFailure;
#pragma omp parallel for schedule(static) reduction(min : failure) if (nw >= kMinParallelFrequencies)
  for (std::ptrdiff_t w = 0; w < nw; ++w) {
    cd block[kMaxSources * kMaxSources];
    const auto uw = static_cast<std::size_t>(w);
    detail::regularized_block(gram.block(uw).data(),
                              removed != nullptr ? removed->block(uw).data() : nullptr,
                              prior.block(uw).data(), lambda, S, block);
    if (!detail::trace_inverse(block, S, terms[uw]) && uw < failure) failure = uw;
  }
  return failure;
}

std::size_t solve_blocks(const BlockField& gram, const BlockField& prior, double lambda,
                         std::span<cd> rhs) {
  const int S = gram.sources();
  const auto nw = static_cast<std::ptrdiff_t>(gram.frequencies());
  std::size_t failure = kNoFailure;
#pragma omp parallel for schedule(static) reduction(min : failure) if (nw >= kMinParallelFrequencies)
  for (std::ptrdiff_t w = 0; w < nw; ++w) {
    cd block[kMaxSources * kMaxSources];
    const auto uw = static_cast<std::size_t>(w);
    detail::regularized_block(gram.block(uw).data(), nullptr, prior.block(uw).data(), lambda, S,
                              block);
    if (!detail::solve(block, S, rhs.data() + uw * S) && uw < failure) failure = uw;
  }
  return failure;
}

}  // namespace csbs::kernels::omp
