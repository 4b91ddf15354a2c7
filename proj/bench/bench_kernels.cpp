// Serial reference kernels vs the OpenMP kernels, and the per-frequency cost
// vs the dense oracle. Run with OMP_NUM_THREADS set to the core count.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "csbs/dense.hpp"
#include "csbs/inverse.hpp"
#include "csbs/selector.hpp"
#include "csbs/spectral.hpp"

using namespace csbs;

namespace {

// Gaussian blobs of varying width, one per (plane, source).
PsfTable blob_table(int planes, int sources, int kernel) {
  PsfTable t(static_cast<std::size_t>(planes));
  for (int c = 0; c < planes; ++c)
    for (int s = 0; s < sources; ++s) {
      Psf p;
      p.grid = Image(kernel, kernel);
      const double sigma = 0.6 + 0.25 * std::abs(c - planes / 2 + 2 * s);
      double total = 0.0;
      for (int y = 0; y < kernel; ++y)
        for (int x = 0; x < kernel; ++x) {
          const double r2 = std::pow(y - kernel / 2, 2) + std::pow(x - kernel / 2, 2);
          total += p.grid(y, x) = std::exp(-r2 / (2 * sigma * sigma));
        }
      for (double& v : p.grid.pixels) v /= total;
      p.pixel_pitch = 1e-6;
      p.plane_distance = 1.0 + 0.01 * c;
      p.wavelength = 3e-8 * (1 + 0.01 * s);
      t[static_cast<std::size_t>(c)].push_back(std::move(p));
    }
  return t;
}

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(1) ? "openmp" : "serial"); }

void BM_AssembleGram(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto t = build_transfer(blob_table(10, 2, 15), n);
  const std::vector<int> mult(10, 3);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_gram(t, mult, exec_of(state)));
  label(state);
}

void BM_GramUpdate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto t = build_transfer(blob_table(4, 2, 15), n);
  auto g = assemble_gram(t, std::vector<int>{2, 2, 2, 2});
  const auto pc = plane_contribution(t, 1);
  for (auto _ : state) {
    gram_update(g, pc, UpdateSign::subtract, exec_of(state));
    gram_update(g, pc, UpdateSign::add, exec_of(state));
  }
  label(state);
}

void BM_CostFast(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto t = build_transfer(blob_table(4, 2, 15), n);
  const auto g = assemble_gram(t, std::vector<int>{2, 1, 1, 2});
  const auto prior = make_white_prior(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(cost_fast(g, prior, 0.5, exec_of(state)));
  label(state);
}

void BM_MapFast(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto t = build_transfer(blob_table(4, 2, 15), n);
  SourceCube src;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < 2; ++s) {
    Image im(n, n);
    for (double& v : im.pixels) v = u(rng);
    src.images.push_back(std::move(im));
  }
  NoiseModel noise;
  noise.snr_db = 20.0;
  const auto meas = simulate_measurements(src, t, std::vector<int>{0, 1, 2, 3}, noise, 3);
  const auto prior = make_white_prior(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(map_reconstruct_fast(meas, t, prior, 0.5, exec_of(state)));
  label(state);
}

void BM_Csbs(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto t = build_transfer(blob_table(12, 2, 15), n);
  const auto cands = CandidateSet::uniform(1.0, 1.11, 12, 4);
  const auto prior = make_white_prior(2, n);
  const auto schedule = state.range(1) ? TrialSchedule::parallel : TrialSchedule::serial;
  for (auto _ : state) {
    GramCost cost(t, prior, 0.5, cands.initial_multiplicity);
    benchmark::DoNotOptimize(run_csbs(cands, 8, cost, schedule));
  }
  state.SetLabel(state.range(1) ? "parallel trials" : "serial trials");
}

void BM_CostDense(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto psfs = blob_table(3, 2, 5);
  const std::vector<int> planes{0, 1, 2};
  const auto prior = make_white_prior(2, n);
  const auto m = static_cast<Eigen::Index>(planes.size()) * n * n;
  const Eigen::MatrixXcd sigma_n = Eigen::MatrixXcd::Identity(m, m);
  const Eigen::MatrixXcd sigma_x = dense::prior_covariance(prior) / 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(dense::cost_dense(psfs, planes, n, sigma_n, sigma_x));
}

}  // namespace

BENCHMARK(BM_AssembleGram)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GramUpdate)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CostFast)->ArgsProduct({{32, 64, 128, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MapFast)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Csbs)->ArgsProduct({{64}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CostDense)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
