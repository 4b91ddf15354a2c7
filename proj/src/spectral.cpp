#include "csbs/spectral.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "csbs/errors.hpp"
#include "kernels/kernels.hpp"

namespace csbs {

TransferCube::TransferCube(int planes, int sources, int side, std::vector<double> plane_distances,
                           std::vector<cd> values)
    : planes_(planes), sources_(sources), side_(side),
      plane_distances_(std::move(plane_distances)), values_(std::move(values)) {
  if (planes < 1 || sources < 1 || side < 1)
    throw std::invalid_argument("TransferCube: dimensions must be positive");
  if (plane_distances_.size() != static_cast<std::size_t>(planes))
    throw std::invalid_argument("TransferCube: one distance per plane required");
  if (values_.size() != static_cast<std::size_t>(planes) * sources * frequencies())
    throw std::invalid_argument("TransferCube: value count does not match dimensions");
}

std::span<const cd> TransferCube::slice(int plane, int source) const {
  if (plane < 0 || plane >= planes_ || source < 0 || source >= sources_)
    throw std::invalid_argument("TransferCube::slice: index out of range");
  return {values_.data() + offset(plane, source), frequencies()};
}

TransferCube build_transfer(const PsfTable& psfs, int image_side) {
  if (psfs.empty() || psfs.front().empty())
    throw std::invalid_argument("build_transfer: empty PSF table");
  if (image_side < 1) throw std::invalid_argument("build_transfer: image side must be positive");
  const int planes = static_cast<int>(psfs.size());
  const int sources = static_cast<int>(psfs.front().size());
  if (sources > kMaxSources)
    throw std::invalid_argument("build_transfer: at most " + std::to_string(kMaxSources) +
                                " sources supported");
  const double pitch = psfs.front().front().pixel_pitch;
  std::vector<double> distances;
  for (const auto& row : psfs) {
    if (static_cast<int>(row.size()) != sources)
      throw std::invalid_argument("build_transfer: every plane needs one PSF per source");
    for (const Psf& p : row) {
      if (p.side() > image_side)
        throw std::invalid_argument("build_transfer: PSF side " + std::to_string(p.side()) +
                                    " exceeds image side " + std::to_string(image_side));
      if (p.side() % 2 == 0) throw std::invalid_argument("build_transfer: PSF side must be odd");
      if (p.pixel_pitch != pitch)
        throw std::invalid_argument("build_transfer: PSFs must share one pixel pitch");
    }
    distances.push_back(row.front().plane_distance);
  }

  const std::size_t nf = static_cast<std::size_t>(image_side) * image_side;
  std::vector<cd> values(static_cast<std::size_t>(planes) * sources * nf);
  const auto jobs = static_cast<std::ptrdiff_t>(planes) * sources;
#pragma omp parallel
  {
    Fft2 fft(image_side);
    std::vector<double> embedded(nf);
#pragma omp for schedule(static)
    for (std::ptrdiff_t job = 0; job < jobs; ++job) {
      const Psf& psf = psfs[static_cast<std::size_t>(job / sources)][static_cast<std::size_t>(job % sources)];
      std::fill(embedded.begin(), embedded.end(), 0.0);
      const int p = psf.side();
      const int half = p / 2;
      // Center pixel to (0, 0), wrapping negative offsets.
      for (int r = 0; r < p; ++r) {
        const int y = ((r - half) % image_side + image_side) % image_side;
        for (int c = 0; c < p; ++c) {
          const int x = ((c - half) % image_side + image_side) % image_side;
          embedded[static_cast<std::size_t>(y) * image_side + x] += psf.grid(r, c);
        }
      }
      fft.forward(embedded, std::span<cd>(values.data() + static_cast<std::size_t>(job) * nf, nf));
    }
  }
  return TransferCube(planes, sources, image_side, std::move(distances), std::move(values));
}

int GramField::total_measurements() const {
  return std::accumulate(multiplicity_.begin(), multiplicity_.end(), 0);
}

namespace {

std::vector<const cd*> plane_slices(const TransferCube& transfer, int plane) {
  std::vector<const cd*> slices;
  for (int s = 0; s < transfer.sources(); ++s) slices.push_back(transfer.slice(plane, s).data());
  return slices;
}

void accumulate(const TransferCube& transfer, int plane, double weight, BlockField& out,
                Exec exec) {
  const auto slices = plane_slices(transfer, plane);
  if (exec == Exec::serial) {
    kernels::serial::outer_accumulate(slices, weight, out);
  } else {
    kernels::omp::outer_accumulate(slices, weight, out);
  }
}

}  // namespace

PlaneContribution plane_contribution(const TransferCube& transfer, int plane, Exec exec) {
  if (plane < 0 || plane >= transfer.planes())
    throw std::invalid_argument("plane_contribution: plane index " + std::to_string(plane) +
                                " out of range");
  PlaneContribution out{plane, BlockField(transfer.sources(), transfer.frequencies())};
  accumulate(transfer, plane, 1.0, out.blocks, exec);
  return out;
}

GramField assemble_gram(const TransferCube& transfer, std::span<const int> multiplicity,
                        Exec exec) {
  if (multiplicity.size() != static_cast<std::size_t>(transfer.planes()))
    throw std::invalid_argument("assemble_gram: multiplicity length must equal plane count");
  bool any = false;
  for (int m : multiplicity) {
    if (m < 0) throw std::invalid_argument("assemble_gram: negative multiplicity");
    any = any || m > 0;
  }
  if (!any) throw std::invalid_argument("assemble_gram: all-zero multiplicity");

  GramField gram(transfer.sources(), transfer.frequencies(), transfer.planes());
  for (int c = 0; c < transfer.planes(); ++c) {
    const int m = multiplicity[static_cast<std::size_t>(c)];
    if (m == 0) continue;
    accumulate(transfer, c, static_cast<double>(m), gram.blocks_, exec);
    gram.multiplicity_[static_cast<std::size_t>(c)] = m;
  }
  return gram;
}

void gram_update(GramField& gram, const PlaneContribution& contribution, UpdateSign sign,
                 Exec exec) {
  if (contribution.plane < 0 || static_cast<std::size_t>(contribution.plane) >= gram.multiplicity_.size())
    throw std::invalid_argument("gram_update: plane index out of range");
  if (contribution.blocks.sources() != gram.sources() ||
      contribution.blocks.frequencies() != gram.frequencies())
    throw std::invalid_argument("gram_update: contribution shape does not match gram");
  int& count = gram.multiplicity_[static_cast<std::size_t>(contribution.plane)];
  const bool subtract = sign == UpdateSign::subtract;
  if (subtract && count < 1)
    throw InvalidState("gram_update: plane " + std::to_string(contribution.plane) +
                       " has zero multiplicity");
  if (exec == Exec::serial) {
    kernels::serial::update_blocks(gram.blocks_, contribution.blocks, subtract);
  } else {
    kernels::omp::update_blocks(gram.blocks_, contribution.blocks, subtract);
  }
  count += subtract ? -1 : 1;
}

double max_abs_difference(const BlockField& a, const BlockField& b) {
  if (a.data().size() != b.data().size())
    throw std::invalid_argument("max_abs_difference: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

PriorSpec make_white_prior(int sources, int side) {
  if (sources < 1 || side < 1) throw std::invalid_argument("make_white_prior: bad dimensions");
  PriorSpec prior;
  prior.side = side;
  const std::size_t nf = static_cast<std::size_t>(side) * side;
  prior.inv_cov = BlockField(sources, nf);
  for (std::size_t w = 0; w < nf; ++w) {
    auto b = prior.inv_cov.block(w);
    for (int s = 0; s < sources; ++s) b[static_cast<std::size_t>(s) * sources + s] = 1.0;
  }
  prior.mean.assign(static_cast<std::size_t>(sources) * nf, 0.0);
  return prior;
}

PriorSpec make_power_spectrum_prior(std::span<const std::vector<double>> power, int side) {
  if (power.empty() || side < 1)
    throw std::invalid_argument("make_power_spectrum_prior: bad dimensions");
  const int sources = static_cast<int>(power.size());
  const std::size_t nf = static_cast<std::size_t>(side) * side;
  PriorSpec prior;
  prior.side = side;
  prior.inv_cov = BlockField(sources, nf);
  for (int s = 0; s < sources; ++s) {
    const auto& ps = power[static_cast<std::size_t>(s)];
    if (ps.size() != nf)
      throw std::invalid_argument("make_power_spectrum_prior: spectrum size mismatch");
    for (std::size_t w = 0; w < nf; ++w) {
      if (!(ps[w] > 0.0) || !std::isfinite(ps[w]))
        throw std::invalid_argument("make_power_spectrum_prior: spectrum must be positive");
      prior.inv_cov.block(w)[static_cast<std::size_t>(s) * sources + s] = 1.0 / ps[w];
    }
  }
  prior.mean.assign(static_cast<std::size_t>(sources) * nf, 0.0);
  return prior;
}

double squared_frequency(int side, std::size_t w) {
  const auto n = static_cast<std::size_t>(side);
  auto signed_index = [side](std::size_t k) {
    const int i = static_cast<int>(k);
    return i <= side / 2 ? i : i - side;
  };
  const int ky = signed_index(w / n);
  const int kx = signed_index(w % n);
  return static_cast<double>(kx * kx + ky * ky);
}

std::vector<double> isotropic_power_spectrum(int side, double amplitude, double corner) {
  if (!(amplitude > 0.0) || !(corner > 0.0))
    throw std::invalid_argument("isotropic_power_spectrum: parameters must be positive");
  const std::size_t nf = static_cast<std::size_t>(side) * side;
  std::vector<double> out(nf);
  for (std::size_t w = 0; w < nf; ++w)
    out[w] = amplitude / (1.0 + squared_frequency(side, w) / (corner * corner));
  return out;
}

}  // namespace csbs
