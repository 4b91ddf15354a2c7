#include "csbs/dense.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace csbs::dense {

namespace {

void guard(std::size_t unknowns) {
  if (unknowns > kMaxDenseUnknowns)
    throw std::invalid_argument("dense oracle refuses " + std::to_string(unknowns) +
                                " unknowns (limit " + std::to_string(kMaxDenseUnknowns) + ")");
}

int source_count(const PsfTable& psfs) {
  if (psfs.empty() || psfs.front().empty()) throw std::invalid_argument("dense: empty PSF table");
  return static_cast<int>(psfs.front().size());
}

Eigen::MatrixXcd inverse(const Eigen::MatrixXcd& m) {
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
  return lu.inverse();
}

}  // namespace

Eigen::MatrixXcd blur_operator(const PsfTable& psfs, std::span<const int> planes, int side) {
  const int S = source_count(psfs);
  const Eigen::Index n2 = static_cast<Eigen::Index>(side) * side;
  guard(static_cast<std::size_t>(n2) * S);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(planes.size()) * n2, S * n2);
  for (std::size_t m = 0; m < planes.size(); ++m) {
    const int plane = planes[m];
    if (plane < 0 || static_cast<std::size_t>(plane) >= psfs.size())
      throw std::invalid_argument("dense: plane index out of range");
    for (int s = 0; s < S; ++s) {
      const Image& k = psfs[static_cast<std::size_t>(plane)][static_cast<std::size_t>(s)].grid;
      const int half = k.rows / 2;
      // y(p) += k(offset) x(q) with p - q = offset - center, wrapped.
      for (int py = 0; py < side; ++py)
        for (int px = 0; px < side; ++px) {
          const Eigen::Index row = static_cast<Eigen::Index>(m) * n2 + py * side + px;
          for (int ky = 0; ky < k.rows; ++ky)
            for (int kx = 0; kx < k.cols; ++kx) {
              const int qy = ((py - (ky - half)) % side + side) % side;
              const int qx = ((px - (kx - half)) % side + side) % side;
              a(row, s * n2 + qy * side + qx) += k(ky, kx);
            }
        }
    }
  }
  return a;
}

Eigen::MatrixXcd dft_matrix(int side) {
  const Eigen::Index n2 = static_cast<Eigen::Index>(side) * side;
  Eigen::MatrixXcd f(n2, n2);
  for (int u = 0; u < side; ++u)
    for (int v = 0; v < side; ++v)
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          const double angle = -2.0 * std::numbers::pi * (static_cast<double>(u * y) + v * x) / side;
          f(u * side + v, y * side + x) = std::polar(1.0, angle);
        }
  return f;
}

Eigen::MatrixXcd from_frequency_blocks(const BlockField& blocks, int side) {
  const int S = blocks.sources();
  const Eigen::Index n2 = static_cast<Eigen::Index>(side) * side;
  if (blocks.frequencies() != static_cast<std::size_t>(n2))
    throw std::invalid_argument("dense: block field does not match side");
  guard(static_cast<std::size_t>(n2) * S);
  const Eigen::MatrixXcd f = dft_matrix(side);
  const Eigen::MatrixXcd f_inv = f.adjoint() / static_cast<double>(n2);
  Eigen::MatrixXcd out(S * n2, S * n2);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) {
      Eigen::VectorXcd diag(n2);
      for (Eigen::Index w = 0; w < n2; ++w)
        diag(w) = blocks.block(static_cast<std::size_t>(w))[static_cast<std::size_t>(i * S + j)];
      out.block(i * n2, j * n2, n2, n2) = f_inv * diag.asDiagonal() * f;
    }
  return out;
}

Eigen::MatrixXcd prior_covariance(const PriorSpec& prior) {
  return inverse(from_frequency_blocks(prior.inv_cov, prior.side));
}

double cost_dense(const PsfTable& psfs, std::span<const int> planes, int side,
                  const Eigen::MatrixXcd& sigma_n, const Eigen::MatrixXcd& sigma_x) {
  const int S = source_count(psfs);
  const Eigen::Index unknowns = static_cast<Eigen::Index>(side) * side * S;
  guard(static_cast<std::size_t>(unknowns));
  if (sigma_x.rows() != unknowns || sigma_x.cols() != unknowns)
    throw std::invalid_argument("cost_dense: sigma_x has the wrong shape");
  Eigen::MatrixXcd precision = inverse(sigma_x);
  if (!planes.empty()) {
    const Eigen::MatrixXcd a = blur_operator(psfs, planes, side);
    if (sigma_n.rows() != a.rows() || sigma_n.cols() != a.rows())
      throw std::invalid_argument("cost_dense: sigma_n has the wrong shape");
    precision += a.adjoint() * Eigen::PartialPivLU<Eigen::MatrixXcd>(sigma_n).solve(a);
  }
  return inverse(precision).trace().real();
}

SourceCube map_reconstruct_dense(const MeasurementSet& measurements, const PsfTable& psfs,
                                 int side, const Eigen::MatrixXcd& sigma_n,
                                 const Eigen::MatrixXcd& sigma_x, std::span<const double> mean) {
  const int S = source_count(psfs);
  const Eigen::Index n2 = static_cast<Eigen::Index>(side) * side;
  const Eigen::Index unknowns = n2 * S;
  guard(static_cast<std::size_t>(unknowns));
  if (mean.size() != static_cast<std::size_t>(unknowns))
    throw std::invalid_argument("map_reconstruct_dense: prior mean has the wrong size");
  const Eigen::MatrixXcd a = blur_operator(psfs, measurements.plane_index, side);
  if (sigma_n.rows() != a.rows() || sigma_x.rows() != unknowns)
    throw std::invalid_argument("map_reconstruct_dense: covariance shape mismatch");

  Eigen::VectorXcd y(a.rows());
  for (std::size_t m = 0; m < measurements.images.size(); ++m)
    for (Eigen::Index i = 0; i < n2; ++i)
      y(static_cast<Eigen::Index>(m) * n2 + i) = measurements.images[m].pixels[static_cast<std::size_t>(i)];
  Eigen::VectorXcd x0(unknowns);
  for (Eigen::Index i = 0; i < unknowns; ++i) x0(i) = mean[static_cast<std::size_t>(i)];

  const Eigen::PartialPivLU<Eigen::MatrixXcd> noise(sigma_n);
  const Eigen::MatrixXcd precision = a.adjoint() * noise.solve(a) + inverse(sigma_x);
  const Eigen::VectorXcd x =
      x0 + Eigen::PartialPivLU<Eigen::MatrixXcd>(precision).solve(a.adjoint() * noise.solve(y - a * x0));

  SourceCube out;
  for (int s = 0; s < S; ++s) {
    Image im(side, side);
    for (Eigen::Index i = 0; i < n2; ++i) im.pixels[static_cast<std::size_t>(i)] = x(s * n2 + i).real();
    out.images.push_back(std::move(im));
  }
  return out;
}

}  // namespace csbs::dense
