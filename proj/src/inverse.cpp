#include "csbs/inverse.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "csbs/errors.hpp"
#include "kernels/block_ops.hpp"
#include "kernels/kernels.hpp"

namespace csbs {

void NoiseModel::validate() const {
  if (!(lambda_reg > 0.0) || !std::isfinite(lambda_reg))
    throw std::invalid_argument("lambda_reg must be positive");
  if (snr_db && !std::isfinite(*snr_db)) throw std::invalid_argument("snr_db must be finite");
}

std::vector<int> expand_multiplicity(std::span<const int> multiplicity) {
  std::vector<int> planes;
  for (std::size_t c = 0; c < multiplicity.size(); ++c) {
    if (multiplicity[c] < 0) throw std::invalid_argument("negative multiplicity");
    planes.insert(planes.end(), static_cast<std::size_t>(multiplicity[c]), static_cast<int>(c));
  }
  return planes;
}

std::vector<int> collapse_planes(std::span<const int> planes, int plane_count) {
  std::vector<int> multiplicity(static_cast<std::size_t>(plane_count), 0);
  for (int p : planes) {
    if (p < 0 || p >= plane_count)
      throw std::invalid_argument("plane index " + std::to_string(p) + " out of range");
    ++multiplicity[static_cast<std::size_t>(p)];
  }
  return multiplicity;
}

namespace {

void check_source(const SourceCube& source, const TransferCube& transfer) {
  if (source.sources() != transfer.sources())
    throw std::invalid_argument("source count " + std::to_string(source.sources()) +
                                " does not match transfer sources " +
                                std::to_string(transfer.sources()));
  for (const Image& im : source.images)
    if (im.rows != transfer.side() || im.cols != transfer.side())
      throw std::invalid_argument("source image size does not match transfer side");
}

std::vector<std::vector<cd>> forward_all(std::span<const Image> images, int side) {
  Fft2 fft(side);
  std::vector<std::vector<cd>> out;
  out.reserve(images.size());
  for (const Image& im : images) {
    out.emplace_back(im.size());
    fft.forward(im.view(), out.back());
  }
  return out;
}

void check_prior(const PriorSpec& prior, int sources, int side) {
  if (prior.sources() != sources || prior.side != side ||
      prior.mean.size() != static_cast<std::size_t>(sources) * side * side)
    throw std::invalid_argument("prior dimensions do not match the system");
}

}  // namespace

MeasurementSet simulate_measurements(const SourceCube& source, const TransferCube& transfer,
                                     std::span<const int> planes, const NoiseModel& noise,
                                     std::uint64_t seed) {
  noise.validate();
  if (planes.empty()) throw std::invalid_argument("simulate_measurements: empty configuration");
  check_source(source, transfer);
  for (int p : planes)
    if (p < 0 || p >= transfer.planes())
      throw std::invalid_argument("simulate_measurements: plane index out of range");

  const int n = transfer.side();
  const std::size_t nf = transfer.frequencies();
  const auto spectra = forward_all(source.images, n);

  MeasurementSet out;
  out.plane_index.assign(planes.begin(), planes.end());
  out.noise_seed = seed;
  Fft2 fft(n);
  std::vector<cd> acc(nf), spatial(nf);
  double power = 0.0;
  for (int p : planes) {
    std::fill(acc.begin(), acc.end(), cd{0.0, 0.0});
    for (int s = 0; s < transfer.sources(); ++s) {
      const auto a = transfer.slice(p, s);
      const auto& x = spectra[static_cast<std::size_t>(s)];
      for (std::size_t w = 0; w < nf; ++w) acc[w] += kernels::detail::mul(a[w], x[w]);
    }
    fft.inverse(acc, spatial);
    Image y(n, n);
    for (std::size_t i = 0; i < nf; ++i) {
      y.pixels[i] = spatial[i].real();
      power += y.pixels[i] * y.pixels[i];
    }
    out.images.push_back(std::move(y));
  }

  if (noise.noiseless) return out;
  power /= static_cast<double>(nf * planes.size());
  out.noise_variance =
      noise.snr_db ? power / std::pow(10.0, *noise.snr_db / 10.0) : noise.lambda_reg;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(out.noise_variance));
  for (Image& y : out.images)
    for (double& v : y.pixels) v += gauss(rng);
  return out;
}

namespace {

void check_cost_inputs(const GramField& gram, const PriorSpec& prior, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("cost: lambda must be positive");
  if (prior.sources() != gram.sources() || prior.inv_cov.frequencies() != gram.frequencies())
    throw std::invalid_argument("cost: prior does not match gram dimensions");
}

double trace_sum(const GramField& gram, const BlockField* removed, const PriorSpec& prior,
                 double lambda, Exec exec) {
  std::vector<double> terms(gram.frequencies());
  const std::size_t failed =
      exec == Exec::serial
          ? kernels::serial::trace_terms(gram.blocks(), removed, prior.inv_cov, lambda, terms)
          : kernels::omp::trace_terms(gram.blocks(), removed, prior.inv_cov, lambda, terms);
  if (failed != kernels::kNoFailure)
    throw SingularSystemError(failed, "regularized block is not positive definite");
  return kernels::ordered_sum(terms);
}

}  // namespace

double cost_fast(const GramField& gram, const PriorSpec& prior, double lambda, Exec exec) {
  check_cost_inputs(gram, prior, lambda);
  return trace_sum(gram, nullptr, prior, lambda, exec);
}

double cost_fast_without(const GramField& gram, const PlaneContribution& removed,
                         const PriorSpec& prior, double lambda, Exec exec) {
  check_cost_inputs(gram, prior, lambda);
  if (removed.blocks.frequencies() != gram.frequencies() ||
      removed.blocks.sources() != gram.sources())
    throw std::invalid_argument("cost: contribution does not match gram dimensions");
  if (removed.plane < 0 || static_cast<std::size_t>(removed.plane) >= gram.multiplicity().size() ||
      gram.multiplicity()[static_cast<std::size_t>(removed.plane)] < 1)
    throw InvalidState("cost: plane " + std::to_string(removed.plane) + " is not in the gram");
  return trace_sum(gram, &removed.blocks, prior, lambda, exec);
}

Reconstruction map_reconstruct_fast(const MeasurementSet& measurements,
                                    const TransferCube& transfer, const PriorSpec& prior,
                                    double lambda, Exec exec) {
  if (!(lambda > 0.0)) throw std::invalid_argument("map_reconstruct: lambda must be positive");
  if (measurements.images.empty() ||
      measurements.images.size() != measurements.plane_index.size())
    throw std::invalid_argument("map_reconstruct: measurement set is empty or inconsistent");
  const int n = transfer.side();
  const int S = transfer.sources();
  const std::size_t nf = transfer.frequencies();
  check_prior(prior, S, n);
  for (const Image& y : measurements.images)
    if (y.rows != n || y.cols != n)
      throw std::invalid_argument("map_reconstruct: measurement size does not match transfer");

  const auto multiplicity = collapse_planes(measurements.plane_index, transfer.planes());
  const GramField gram = assemble_gram(transfer, multiplicity, exec);

  const auto y_hat = forward_all(measurements.images, n);
  std::vector<Image> mean_images;
  for (int s = 0; s < S; ++s) {
    Image m(n, n);
    std::copy_n(prior.mean.begin() + static_cast<std::ptrdiff_t>(s * nf), nf, m.pixels.begin());
    mean_images.push_back(std::move(m));
  }
  const auto mean_hat = forward_all(mean_images, n);

  // rhs(w) = A(w)^H (y(w) - A(w) x0(w)), S entries per frequency.
  std::vector<cd> rhs(nf * static_cast<std::size_t>(S), cd{0.0, 0.0});
  const auto nw = static_cast<std::ptrdiff_t>(nf);
  const int M = measurements.size();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t iw = 0; iw < nw; ++iw) {
    const auto w = static_cast<std::size_t>(iw);
    for (int m = 0; m < M; ++m) {
      const int p = measurements.plane_index[static_cast<std::size_t>(m)];
      cd residual = y_hat[static_cast<std::size_t>(m)][w];
      for (int s = 0; s < S; ++s)
        residual -= kernels::detail::mul(transfer.at(p, s, w), mean_hat[static_cast<std::size_t>(s)][w]);
      for (int s = 0; s < S; ++s)
        rhs[w * S + s] += kernels::detail::conj_mul(transfer.at(p, s, w), residual);
    }
  }

  const std::size_t failed =
      exec == Exec::serial ? kernels::serial::solve_blocks(gram.blocks(), prior.inv_cov, lambda, rhs)
                           : kernels::omp::solve_blocks(gram.blocks(), prior.inv_cov, lambda, rhs);
  if (failed != kernels::kNoFailure)
    throw SingularSystemError(failed, "regularized block is not positive definite");

  Reconstruction out;
  Fft2 fft(n);
  std::vector<cd> spectrum(nf), spatial(nf);
  for (int s = 0; s < S; ++s) {
    for (std::size_t w = 0; w < nf; ++w) spectrum[w] = rhs[w * S + s];
    fft.inverse(spectrum, spatial);
    Image x = mean_images[static_cast<std::size_t>(s)];
    for (std::size_t i = 0; i < nf; ++i) {
      x.pixels[i] += spatial[i].real();
      out.max_imag_residual = std::max(out.max_imag_residual, std::abs(spatial[i].imag()));
    }
    out.estimate.images.push_back(std::move(x));
  }
  return out;
}

}  // namespace csbs
