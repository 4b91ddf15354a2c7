// The OpenMP kernels must reproduce the serial reference bit for bit, for any
// thread count.

#include <omp.h>

#include <cstring>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "csbs/inverse.hpp"
#include "csbs/selector.hpp"
#include "csbs/spectral.hpp"

using namespace csbs;

namespace {

bool same_bits(std::span<const cd> a, std::span<const cd> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(cd)) == 0;
}

bool same_bits(const Image& a, const Image& b) {
  return a.pixels.size() == b.pixels.size() &&
         std::memcmp(a.pixels.data(), b.pixels.data(), a.pixels.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("serial and OpenMP kernels agree bitwise") {
  std::mt19937_64 rng(23);
  const int n = 32;  // above the parallel threshold
  const auto psfs = oracle::random_table(4, 3, 9, rng);
  const auto t = build_transfer(psfs, n);
  const auto prior = make_power_spectrum_prior(
      std::vector<std::vector<double>>(3, isotropic_power_spectrum(n, 2.0, 3.0)), n);
  const std::vector<int> mult{2, 1, 0, 3};

  for (int threads : {1, 2, 4, 7}) {
    omp_set_num_threads(threads);
    CAPTURE(threads);
    const auto gs = assemble_gram(t, mult, Exec::serial);
    const auto gp = assemble_gram(t, mult, Exec::parallel);
    CHECK(same_bits(gs.blocks().data(), gp.blocks().data()));

    const auto pcs = plane_contribution(t, 3, Exec::serial);
    const auto pcp = plane_contribution(t, 3, Exec::parallel);
    CHECK(same_bits(pcs.blocks.data(), pcp.blocks.data()));

    auto us = gs;
    auto up = gp;
    gram_update(us, pcs, UpdateSign::subtract, Exec::serial);
    gram_update(up, pcp, UpdateSign::subtract, Exec::parallel);
    CHECK(same_bits(us.blocks().data(), up.blocks().data()));

    for (double lambda : {0.01, 1.0, 100.0}) {
      const double cs = cost_fast(gs, prior, lambda, Exec::serial);
      const double cp = cost_fast(gs, prior, lambda, Exec::parallel);
      CHECK(std::memcmp(&cs, &cp, sizeof cs) == 0);
      const double ws = cost_fast_without(gs, pcs, prior, lambda, Exec::serial);
      const double wp = cost_fast_without(gs, pcs, prior, lambda, Exec::parallel);
      CHECK(std::memcmp(&ws, &wp, sizeof ws) == 0);
      // Fused trial equals an explicit subtract + evaluate.
      const double explicit_cost = cost_fast(us, prior, lambda, Exec::serial);
      CHECK(std::memcmp(&ws, &explicit_cost, sizeof ws) == 0);
    }

    SourceCube src;
    for (int s = 0; s < 3; ++s) src.images.push_back(oracle::random_image(n, rng));
    NoiseModel noise;
    noise.snr_db = 20.0;
    const auto meas = simulate_measurements(src, t, expand_multiplicity(mult), noise, 5);
    const auto rs = map_reconstruct_fast(meas, t, prior, 0.5, Exec::serial);
    const auto rp = map_reconstruct_fast(meas, t, prior, 0.5, Exec::parallel);
    for (int s = 0; s < 3; ++s) CHECK(same_bits(rs.estimate.images[s], rp.estimate.images[s]));
  }
  omp_set_num_threads(1);
}

TEST_CASE("serial and parallel CSBS trial schedules give identical histories") {
  std::mt19937_64 rng(29);
  const int n = 16;
  const auto psfs = oracle::random_table(8, 2, 7, rng);
  const auto t = build_transfer(psfs, n);
  const auto prior = make_white_prior(2, n);
  CandidateSet cands;
  for (int c = 0; c < 8; ++c) cands.plane_distances.push_back(1.0 + c);
  cands.initial_multiplicity.assign(8, 2);

  omp_set_num_threads(4);
  GramCost a(t, prior, 0.1, cands.initial_multiplicity, Exec::serial);
  GramCost b(t, prior, 0.1, cands.initial_multiplicity, Exec::parallel);
  const auto sa = run_csbs(cands, 5, a, TrialSchedule::serial);
  const auto sb = run_csbs(cands, 5, b, TrialSchedule::parallel);
  omp_set_num_threads(1);

  REQUIRE(sa.history.size() == sb.history.size());
  for (std::size_t i = 0; i < sa.history.size(); ++i) {
    CHECK(sa.history[i].plane == sb.history[i].plane);
    CHECK(std::memcmp(&sa.history[i].cost, &sb.history[i].cost, sizeof(double)) == 0);
  }
  CHECK(sa.multiplicity == sb.multiplicity);
  CHECK(sa.evaluations == sb.evaluations);
}
