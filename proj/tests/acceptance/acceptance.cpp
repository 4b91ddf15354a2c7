// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "csbs/dense.hpp"
#include "csbs/harness/config.hpp"
#include "csbs/harness/experiment.hpp"
#include "csbs/inverse.hpp"
#include "csbs/optics.hpp"
#include "csbs/selector.hpp"
#include "csbs/spectral.hpp"

namespace fs = std::filesystem;
using namespace csbs;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// One random instance of the small family used by criteria 1 and 2.
struct Instance {
  int n = 0, sources = 0, planes = 0;
  PsfTable psfs;
  TransferCube transfer;
  std::vector<int> plane_list;
  PriorSpec prior;
  double lambda = 1.0;
};

Instance random_instance(std::mt19937_64& rng, int index) {
  static constexpr int sides[] = {2, 4, 8};
  static constexpr double lambdas[] = {0.01, 1.0, 100.0};
  Instance in;
  in.n = sides[index % 3];
  in.sources = 1 + (index / 3) % 3;
  in.planes = 1 + (index / 9) % 4;
  in.lambda = lambdas[(index / 36) % 3];
  const bool power = (index / 108) % 2 == 1;

  std::uniform_int_distribution<int> kpick(0, (oracle::kernel_side_for(in.n, 7) - 1) / 2);
  in.psfs.resize(static_cast<std::size_t>(in.planes));
  for (int c = 0; c < in.planes; ++c)
    for (int s = 0; s < in.sources; ++s)
      in.psfs[static_cast<std::size_t>(c)].push_back(oracle::random_psf(2 * kpick(rng) + 1, rng, 1.0 + c));
  in.transfer = build_transfer(in.psfs, in.n);

  std::uniform_int_distribution<int> copies(0, 2);
  for (int c = 0; c < in.planes; ++c)
    for (int k = copies(rng); k > 0; --k) in.plane_list.push_back(c);
  if (in.plane_list.empty()) in.plane_list.push_back(0);

  if (power) {
    std::uniform_real_distribution<double> amp(0.5, 2.0), corner(0.5, 3.0);
    std::vector<std::vector<double>> spectra;
    for (int s = 0; s < in.sources; ++s) spectra.push_back(isotropic_power_spectrum(in.n, amp(rng), corner(rng)));
    in.prior = make_power_spectrum_prior(spectra, in.n);
  } else {
    in.prior = make_white_prior(in.sources, in.n);
  }
  return in;
}

Eigen::MatrixXcd identity(std::size_t m) {
  return Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
}

Outcome criterion_cost_oracle() {
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  double worst = 0.0;
  const int count = 216;
  for (int i = 0; i < count; ++i) {
    const Instance in = random_instance(rng, i);
    const double fast =
        cost_fast(assemble_gram(in.transfer, collapse_planes(in.plane_list, in.planes)), in.prior, in.lambda);
    const auto m = in.plane_list.size() * static_cast<std::size_t>(in.n * in.n);
    const double slow = dense::cost_dense(in.psfs, in.plane_list, in.n, identity(m),
                                          dense::prior_covariance(in.prior) / in.lambda);
    worst = std::max(worst, std::abs(fast - slow) / slow);
  }
  const double elapsed = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d instances, worst relative error %.3g, %.2f s", count, worst, elapsed);
  return {worst < 1e-8 && elapsed < 60.0, buf};
}

Outcome criterion_map_oracle() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  const int count = 216;
  for (int i = 0; i < count; ++i) {
    const Instance in = random_instance(rng, i);
    MeasurementSet meas;
    meas.plane_index = in.plane_list;
    for (std::size_t k = 0; k < in.plane_list.size(); ++k)
      meas.images.push_back(oracle::random_image(in.n, rng, -1.0, 2.0));
    const auto fast = map_reconstruct_fast(meas, in.transfer, in.prior, in.lambda);
    const auto m = in.plane_list.size() * static_cast<std::size_t>(in.n * in.n);
    const auto slow = dense::map_reconstruct_dense(meas, in.psfs, in.n, identity(m),
                                                   dense::prior_covariance(in.prior) / in.lambda, in.prior.mean);
    for (int s = 0; s < in.sources; ++s)
      for (std::size_t p = 0; p < slow.images[static_cast<std::size_t>(s)].pixels.size(); ++p)
        worst = std::max(worst, std::abs(fast.estimate.images[static_cast<std::size_t>(s)].pixels[p] -
                                         slow.images[static_cast<std::size_t>(s)].pixels[p]));
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "%d instances, worst max-abs error %.3g", count, worst);
  return {worst < 1e-6, buf};
}

Outcome criterion_incremental_gram() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int seq = 0; seq < 50; ++seq) {
    const int planes = 2 + seq % 5, sources = 1 + seq % 3, n = 4 << (seq % 3);
    const auto t = build_transfer(oracle::random_table(planes, sources, oracle::kernel_side_for(n), rng), n);
    std::vector<int> mult(static_cast<std::size_t>(planes), 1);
    GramField g = assemble_gram(t, mult);
    std::uniform_int_distribution<int> pick(0, planes - 1);
    for (int step = 0; step < 40; ++step) {
      const int c = pick(rng);
      const bool remove = mult[static_cast<std::size_t>(c)] > 0 && (rng() & 1u);
      gram_update(g, plane_contribution(t, c), remove ? UpdateSign::subtract : UpdateSign::add);
      mult[static_cast<std::size_t>(c)] += remove ? -1 : 1;
    }
    worst = std::max(worst, max_abs_difference(g.blocks(), assemble_gram(t, mult).blocks()));
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "50 sequences of 40 updates, worst block error %.3g", worst);
  return {worst < 1e-10, buf};
}

Outcome criterion_csbs_properties() {
  std::mt19937_64 rng(404);
  const int C = 6, M = 3, n = 4, S = 2;
  CandidateSet cands;
  for (int c = 0; c < C; ++c) cands.plane_distances.push_back(1.0 + 0.01 * c);
  cands.initial_multiplicity.assign(C, 1);
  int monotone = 0, bounded = 0, counted = 0, optimal = 0;
  for (int i = 0; i < 50; ++i) {
    const auto t = build_transfer(oracle::random_table(C, S, 3, rng), n);
    const auto prior = make_white_prior(S, n);
    const double lambda = std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 1.0)(rng));
    GramCost cost(t, prior, lambda, cands.initial_multiplicity);
    const auto state = run_csbs(cands, M, cost);
    // Both sides from the same from-scratch evaluation, so rounding in the
    // incremental path cannot flip the comparison.
    auto scratch = [&](std::span<const int> mult) { return cost_fast(assemble_gram(t, mult), prior, lambda); };
    const auto best = exhaustive(cands, M, scratch);
    bool mono = true;
    double previous = state.initial_cost;
    for (const auto& e : state.history) {
      mono = mono && e.cost >= previous;
      previous = e.cost;
    }
    monotone += mono;
    bounded += best.cost <= scratch(state.multiplicity);
    counted += state.evaluations == 15;
    optimal += state.multiplicity == best.multiplicity;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "monotone %d/50, exhaustive <= csbs %d/50, 15 evaluations %d/50, csbs optimal on %d/50", monotone,
                bounded, counted, optimal);
  return {monotone == 50 && bounded == 50 && counted == 50, buf};
}

// Best-of-batches per-call time of `fn`.
double time_per_call(const std::function<void()>& fn, double budget = 0.3) {
  fn();
  double best = 1e300;
  const auto start = Clock::now();
  while (seconds_since(start) < budget || best == 1e300) {
    int reps = 0;
    const auto t0 = Clock::now();
    do {
      fn();
      ++reps;
    } while (seconds_since(t0) < 0.02);
    best = std::min(best, seconds_since(t0) / reps);
  }
  return best;
}

Outcome criterion_complexity() {
  std::mt19937_64 rng(505);
  const int S = 2;
  std::vector<double> times;
  for (int n : {32, 64, 128}) {
    const auto t = build_transfer(oracle::random_table(3, S, 5, rng), n);
    const auto prior = make_white_prior(S, n);
    const auto g = assemble_gram(t, std::vector<int>{2, 1, 1});
    double sink = 0.0;
    times.push_back(time_per_call([&] { sink += cost_fast(g, prior, 0.5); }));
    if (sink == 0.0) std::printf("  (unexpected zero cost)\n");
  }
  const double r1 = times[1] / times[0], r2 = times[2] / times[1];

  const int nd = 16;
  const auto psfs = oracle::random_table(2, S, 5, rng);
  const auto dprior = make_white_prior(S, nd);
  const std::vector<int> planes{0, 1, 1};
  const Eigen::MatrixXcd sigma_n = identity(planes.size() * nd * nd);
  const Eigen::MatrixXcd sigma_x = dense::prior_covariance(dprior) / 0.5;
  double sink = 0.0;
  const double dense_time =
      time_per_call([&] { sink += dense::cost_dense(psfs, planes, nd, sigma_n, sigma_x); }, 1.0);
  const double speedup = dense_time / times[1];

  char buf[240];
  std::snprintf(buf, sizeof buf,
                "fast cost %.3g / %.3g / %.3g s at N=32/64/128 (ratios %.2f, %.2f); dense N=16 %.3g s = %.0fx fast N=64",
                times[0], times[1], times[2], r1, r2, dense_time, speedup);
  return {r1 <= 5.0 && r2 <= 5.0 && speedup >= 100.0 && sink > 0.0, buf};
}

Outcome criterion_reproduction() {
  const auto t0 = Clock::now();
  std::ostringstream sink;
  std::vector<double> near_gaps, far_gaps;
  bool every_seed = true;
  for (int k = 0; k < 5; ++k) {
    for (double sep : {3.0, 15.0}) {
      std::vector<std::string> ov{"spectrum.separation_dof=" + std::to_string(sep),
                                  "noise.seed=" + std::to_string(1000 + k),
                                  "source.seed=" + std::to_string(7 + k)};
      const auto cfg = harness::parse_config(nlohmann::json::object(), ov);
      cfg.validate();
      const auto r = harness::run_single(cfg, sink);
      const double gap = r.csbs.mean_ssim - r.focal.mean_ssim;
      std::printf("  seed %d, %4.1f DOF: csbs %.4f, focal %.4f, gap %+.4f\n", k, sep, r.csbs.mean_ssim,
                  r.focal.mean_ssim, gap);
      if (sep == 3.0) {
        near_gaps.push_back(gap);
        every_seed = every_seed && gap > 0.0;
      } else {
        far_gaps.push_back(gap);
      }
    }
  }
  const double mean_gap = std::accumulate(near_gaps.begin(), near_gaps.end(), 0.0) / 5.0;
  double far_worst = 0.0;
  for (double g : far_gaps) far_worst = std::max(far_worst, std::abs(g));
  const double elapsed = seconds_since(t0);
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "3 DOF: csbs ahead on every seed %s, mean gap %+.4f (need >= 0.05); 15 DOF: worst |gap| %.4f; %.1f s",
                every_seed ? "yes" : "no", mean_gap, far_worst, elapsed);
  return {every_seed && mean_gap >= 0.05 && far_worst <= 0.05 && elapsed < 600.0, buf};
}

Outcome criterion_psf_physics() {
  const SieveParams sieve;
  const double pitch = default_pixel_pitch(sieve);
  double worst_sum = 0.0, worst_sym = 0.0;
  bool peak_ok = true;
  for (double w : {33.4e-9, 33.5e-9, 50e-9}) {
    const double f = focal_length(sieve, w), dof = depth_of_focus(sieve, w);
    std::vector<double> peaks;
    for (int i = -10; i <= 10; ++i) {
      const Psf p = generate_psf(sieve, w, f + 0.5 * i * dof, 31, pitch);
      const Image& g = p.grid;
      worst_sum = std::max(worst_sum, std::abs(std::accumulate(g.pixels.begin(), g.pixels.end(), 0.0) - 1.0));
      for (int y = 0; y < g.rows; ++y)
        for (int x = 0; x < g.cols; ++x) {
          worst_sym = std::max(worst_sym, std::abs(g(y, x) - g(x, g.rows - 1 - y)));
          worst_sym = std::max(worst_sym, std::abs(g(y, x) - g(x, y)));
        }
      peaks.push_back(*std::max_element(g.pixels.begin(), g.pixels.end()));
    }
    peak_ok = peak_ok && std::max_element(peaks.begin(), peaks.end()) - peaks.begin() == 10;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "sum error %.3g, symmetry error %.3g, peak at focus over 21 planes %s", worst_sum,
                worst_sym, peak_ok ? "yes" : "no");
  return {worst_sum <= 1e-9 && worst_sym <= 1e-9 && peak_ok, buf};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / ("csbs_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<int> workers{1, 2, 4, 1};
  for (std::size_t i = 0; i < workers.size(); ++i) {
    const std::string cmd = std::string(CSBS_CLI_PATH) + " run --no-timestamp -w " + std::to_string(workers[i]) +
                            " -o " + (root / std::to_string(i)).string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "csbs run failed: " + cmd};
  }
  int identical = 0, compared = 0;
  for (const char* name : {"selection.csv", "configuration.csv", "ssim.csv", "lambda_search.csv"}) {
    const std::string first = slurp(root / "0" / name);
    for (std::size_t i = 1; i < workers.size(); ++i) {
      ++compared;
      identical += !first.empty() && slurp(root / std::to_string(i) / name) == first;
    }
  }
  fs::remove_all(root);
  return {identical == compared, std::to_string(identical) + "/" + std::to_string(compared) +
                                     " CSV comparisons byte-identical across worker counts 1, 2, 4, 1"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"fast cost vs dense oracle", criterion_cost_oracle},
      {"fast MAP vs dense oracle", criterion_map_oracle},
      {"incremental gram updates", criterion_incremental_gram},
      {"csbs properties", criterion_csbs_properties},
      {"complexity", criterion_complexity},
      {"csbs vs focal planes", criterion_reproduction},
      {"psf physics", criterion_psf_physics},
      {"cli determinism", criterion_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("criterion %zu (%s): %s: %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
