#include "kernels/kernels.hpp"

#include "kernels/block_ops.hpp"

namespace csbs::kernels::serial {

void outer_accumulate(std::span<const cd* const> slices, double weight, BlockField& out) {
  const int S = out.sources();
  for (std::size_t w = 0; w < out.frequencies(); ++w) {
    cd* b = out.block(w).data();
    for (int i = 0; i < S; ++i)
      for (int j = 0; j < S; ++j) b[i * S + j] += weight * detail::conj_mul(slices[i][w], slices[j][w]);
  }
}

void update_blocks(BlockField& gram, const BlockField& contribution, bool subtract) {
  const int S = gram.sources();
  const std::size_t n = gram.block_size();
  for (std::size_t w = 0; w < gram.frequencies(); ++w) {
    cd* g = gram.block(w).data();
    const cd* c = contribution.block(w).data();
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
  cd block[kMaxSources * kMaxSources];
  for (std::size_t w = 0; w < gram.frequencies(); ++w) {
    detail::regularized_block(gram.block(w).data(),
                              removed != nullptr ? removed->block(w).data() : nullptr,
                              prior.block(w).data(), lambda, S, block);
    if (!detail::trace_inverse(block, S, terms[w])) return w;
  }
  return kNoFailure;
}

std::size_t solve_blocks(const BlockField& gram, const BlockField& prior, double lambda,
                         std::span<cd> rhs) {
  const int S = gram.sources();
  cd block[kMaxSources * kMaxSources];
  for (std::size_t w = 0; w < gram.frequencies(); ++w) {
    detail::regularized_block(gram.block(w).data(), nullptr, prior.block(w).data(), lambda, S,
                              block);
    if (!detail::solve(block, S, rhs.data() + w * S)) return w;
  }
  return kNoFailure;
}

}  // namespace csbs::kernels::serial
