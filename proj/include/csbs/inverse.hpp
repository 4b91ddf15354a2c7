#pragma once

// Expected-SSE cost and MAP reconstruction on the diagonalized system, plus
// the measurement simulator.
//
// Regularization convention: `lambda` multiplies the prior inverse covariance,
//   cost(d) = sum_w tr((G_d(w) + lambda * P(w))^-1),
// i.e. lambda is the noise-to-prior variance ratio. This is the posterior
// error covariance for noise covariance lambda * I and prior covariance
// Sigma_x, divided by lambda.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "csbs/execution.hpp"
#include "csbs/image.hpp"
#include "csbs/spectral.hpp"

namespace csbs {

struct SourceCube {
  std::vector<Image> images;        // S images, N x N
  std::vector<double> wavelengths;  // one per image (may be empty for anonymous data)

  int sources() const { return static_cast<int>(images.size()); }
  int side() const { return images.empty() ? 0 : images.front().rows; }
};

struct MeasurementSet {
  std::vector<Image> images;     // M images, N x N
  std::vector<int> plane_index;  // candidate plane of each image
  std::uint64_t noise_seed = 0;
  double noise_variance = 0.0;

  int size() const { return static_cast<int>(images.size()); }
};

struct NoiseModel {
  double lambda_reg = 1.0;
  // When set, noise variance = mean noiseless measurement power / 10^(snr/10).
  // Otherwise the variance is lambda_reg (the value the MAP weighting assumes
  // under a unit prior). A negative-infinite SNR is not accepted; use
  // `noiseless` for exact data.
  std::optional<double> snr_db;
  bool noiseless = false;

  void validate() const;
};

// Multiplicity vector -> plane list with repetition, in plane order.
std::vector<int> expand_multiplicity(std::span<const int> multiplicity);
std::vector<int> collapse_planes(std::span<const int> planes, int plane_count);

MeasurementSet simulate_measurements(const SourceCube& source, const TransferCube& transfer,
                                     std::span<const int> planes, const NoiseModel& noise,
                                     std::uint64_t seed);

// sum_w tr((G(w) + lambda P(w))^-1); throws SingularSystemError naming the
// first frequency whose regularized block is not positive definite.
double cost_fast(const GramField& gram, const PriorSpec& prior, double lambda,
                 Exec exec = Exec::parallel);

// Same cost with one copy of `removed` taken out of the gram, without
// mutating it. Bit-identical to gram_update(subtract) followed by cost_fast.
double cost_fast_without(const GramField& gram, const PlaneContribution& removed,
                         const PriorSpec& prior, double lambda, Exec exec = Exec::parallel);

struct Reconstruction {
  SourceCube estimate;
  double max_imag_residual = 0.0;  // largest |imag| before taking the real part
};

Reconstruction map_reconstruct_fast(const MeasurementSet& measurements,
                                    const TransferCube& transfer, const PriorSpec& prior,
                                    double lambda, Exec exec = Exec::parallel);

}  // namespace csbs
