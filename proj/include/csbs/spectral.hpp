#pragma once

// Frequency-domain representation of the block-circulant forward operator.
//
// With circular boundary conditions every (plane, source) block of the
// forward operator is diagonalized by the 2D DFT, so the whole system
// decouples into N*N independent S x S problems, one per spatial frequency.
// GramField stores those S x S blocks of sum_m A_m^H A_m contiguously per
// frequency (frequency-major), which is the layout the cost and MAP kernels
// stream through.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "csbs/execution.hpp"
#include "csbs/fft.hpp"
#include "csbs/optics.hpp"

namespace csbs {

// psfs[c][s]: PSF of source s at candidate plane c.
using PsfTable = std::vector<std::vector<Psf>>;

class TransferCube {
 public:
  TransferCube() = default;
  TransferCube(int planes, int sources, int side, std::vector<double> plane_distances,
               std::vector<cd> values);

  int planes() const { return planes_; }
  int sources() const { return sources_; }
  int side() const { return side_; }
  std::size_t frequencies() const { return static_cast<std::size_t>(side_) * side_; }
  const std::vector<double>& plane_distances() const { return plane_distances_; }

  // DFT of the corner-origin PSF of source s at plane c, N*N values.
  std::span<const cd> slice(int plane, int source) const;
  cd at(int plane, int source, std::size_t frequency) const {
    return values_[offset(plane, source) + frequency];
  }
  const std::vector<cd>& values() const { return values_; }

 private:
  std::size_t offset(int plane, int source) const {
    return (static_cast<std::size_t>(plane) * sources_ + source) * frequencies();
  }

  int planes_ = 0;
  int sources_ = 0;
  int side_ = 0;
  std::vector<double> plane_distances_;
  std::vector<cd> values_;
};

TransferCube build_transfer(const PsfTable& psfs, int image_side);

// Per-frequency S x S blocks, row-major within each block.
class BlockField {
 public:
  BlockField() = default;
  BlockField(int sources, std::size_t frequencies)
      : sources_(sources), frequencies_(frequencies),
        data_(frequencies * static_cast<std::size_t>(sources) * sources) {}

  int sources() const { return sources_; }
  std::size_t frequencies() const { return frequencies_; }
  std::size_t block_size() const { return static_cast<std::size_t>(sources_) * sources_; }

  std::span<cd> block(std::size_t w) { return {data_.data() + w * block_size(), block_size()}; }
  std::span<const cd> block(std::size_t w) const {
    return {data_.data() + w * block_size(), block_size()};
  }
  std::span<cd> data() { return data_; }
  std::span<const cd> data() const { return data_; }

 private:
  int sources_ = 0;
  std::size_t frequencies_ = 0;
  std::vector<cd> data_;
};

// h(w) h(w)^H for one candidate plane, entry (s, s') = conj(A_s(w)) A_s'(w).
struct PlaneContribution {
  int plane = 0;
  BlockField blocks;
};

enum class UpdateSign { add, subtract };

class GramField {
 public:
  GramField() = default;
  GramField(int sources, std::size_t frequencies, int planes)
      : blocks_(sources, frequencies), multiplicity_(static_cast<std::size_t>(planes), 0) {}

  int sources() const { return blocks_.sources(); }
  std::size_t frequencies() const { return blocks_.frequencies(); }
  const BlockField& blocks() const { return blocks_; }
  std::span<const cd> block(std::size_t w) const { return blocks_.block(w); }
  const std::vector<int>& multiplicity() const { return multiplicity_; }
  int total_measurements() const;

 private:
  friend GramField assemble_gram(const TransferCube&, std::span<const int>, Exec);
  friend void gram_update(GramField&, const PlaneContribution&, UpdateSign, Exec);

  BlockField blocks_;
  std::vector<int> multiplicity_;
};

PlaneContribution plane_contribution(const TransferCube& transfer, int plane,
                                     Exec exec = Exec::parallel);

GramField assemble_gram(const TransferCube& transfer, std::span<const int> multiplicity,
                        Exec exec = Exec::parallel);

// gram +/- contribution, followed by re-Hermitization of every block.
// O(S^2 N^2) regardless of how many planes are summed in.
void gram_update(GramField& gram, const PlaneContribution& contribution, UpdateSign sign,
                 Exec exec = Exec::parallel);

double max_abs_difference(const BlockField& a, const BlockField& b);

// Gaussian prior on the sources: per-frequency inverse covariance blocks and
// a spatial mean cube (S images of N x N, row-major, concatenated).
struct PriorSpec {
  int side = 0;
  BlockField inv_cov;
  std::vector<double> mean;

  int sources() const { return inv_cov.sources(); }
};

enum class PriorKind { white, power_spectrum };

PriorSpec make_white_prior(int sources, int side);

// power[s] holds N*N positive spectrum values in DFT index order.
PriorSpec make_power_spectrum_prior(std::span<const std::vector<double>> power, int side);

// a / (1 + |w|^2 / corner^2) using signed integer frequency indices.
std::vector<double> isotropic_power_spectrum(int side, double amplitude = 1.0,
                                             double corner = 1.0);

// Squared radial frequency |w|^2 of DFT bin w on an N x N grid.
double squared_frequency(int side, std::size_t w);

// Versioned binary container; round-trips bit-exactly.
void write_transfer(const TransferCube& transfer, std::ostream& out);
TransferCube read_transfer(std::istream& in);

}  // namespace csbs
