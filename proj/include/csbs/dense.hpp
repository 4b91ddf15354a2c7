#pragma once

// Dense reference path: builds the full block-circulant system explicitly and
// evaluates the posterior error covariance and MAP estimate with ordinary
// dense linear algebra. Used as a testing oracle for the per-frequency path;
// refuses systems with more than kMaxDenseUnknowns unknowns.

#include <span>

#include <Eigen/Dense>

#include "csbs/inverse.hpp"
#include "csbs/spectral.hpp"

namespace csbs::dense {

inline constexpr std::size_t kMaxDenseUnknowns = 2048;

// Circular-convolution operator for the listed planes, (M N^2) x (S N^2).
// Row/column order: plane-major (resp. source-major), then row-major pixels.
// Built directly from the center-origin PSF grids, without any DFT.
Eigen::MatrixXcd blur_operator(const PsfTable& psfs, std::span<const int> planes, int side);

// Unnormalized 2D DFT matrix (N^2 x N^2) from the exponential formula.
Eigen::MatrixXcd dft_matrix(int side);

// F~^-1 B F~ for per-frequency S x S blocks B, i.e. the spatial-domain matrix
// whose block-diagonalization the blocks represent.
Eigen::MatrixXcd from_frequency_blocks(const BlockField& blocks, int side);

// Spatial-domain prior covariance Sigma_x (inverse of the inverse covariance).
Eigen::MatrixXcd prior_covariance(const PriorSpec& prior);

// tr((A^H Sigma_n^-1 A + Sigma_x^-1)^-1) for the listed planes.
double cost_dense(const PsfTable& psfs, std::span<const int> planes, int side,
                  const Eigen::MatrixXcd& sigma_n, const Eigen::MatrixXcd& sigma_x);

// x0 + (A^H Sigma_n^-1 A + Sigma_x^-1)^-1 A^H Sigma_n^-1 (y - A x0).
SourceCube map_reconstruct_dense(const MeasurementSet& measurements, const PsfTable& psfs,
                                 int side, const Eigen::MatrixXcd& sigma_n,
                                 const Eigen::MatrixXcd& sigma_x, std::span<const double> mean);

}  // namespace csbs::dense
