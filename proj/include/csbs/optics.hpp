#pragma once

// Diffractive-lens geometry and defocused-pupil PSF synthesis.
//
// A diffractive lens of diameter D whose outermost zone has width dr focuses
// wavelength l at f(l) = D * dr / l. PSFs are the squared magnitude of the
// DFT of the circular pupil carrying a quadratic defocus phase
//   (pi / l) * (1/d - 1/f(l)) * r^2,
// sampled so that the output grid has the requested pixel pitch. Grids are
// stored center-origin (odd side, center pixel at (P/2, P/2)).

#include <span>
#include <vector>

#include "csbs/image.hpp"

namespace csbs {

struct SieveParams {
  double diameter = 0.01;              // meters
  double smallest_zone_width = 5e-6;   // meters
  int pupil_samples = 256;             // side of the pupil sampling grid

  void validate() const;
};

// Ordered list of source wavelengths (meters), strictly increasing.
class SpectralSetup {
 public:
  SpectralSetup() = default;
  explicit SpectralSetup(std::vector<double> wavelengths);

  int size() const { return static_cast<int>(wavelengths_.size()); }
  double operator[](int s) const { return wavelengths_[static_cast<std::size_t>(s)]; }
  const std::vector<double>& wavelengths() const { return wavelengths_; }

 private:
  std::vector<double> wavelengths_;
};

struct Psf {
  Image grid;                  // P x P, nonnegative, unit sum
  double pixel_pitch = 0.0;
  double plane_distance = 0.0;
  double wavelength = 0.0;
  // Fraction of the full-field energy that landed inside the P x P crop.
  double crop_energy_fraction = 1.0;
  // Set when more than 5% of the energy fell outside the crop.
  bool truncated = false;

  int side() const { return grid.rows; }
};

inline constexpr double kTruncationWarningFraction = 0.05;

double focal_length(const SieveParams& sieve, double wavelength);
double depth_of_focus(const SieveParams& sieve, double wavelength);

// Pitch at which the in-focus main lobe (2.44 dr wide, independent of the
// wavelength) spans five pixels.
double default_pixel_pitch(const SieveParams& sieve);

Psf generate_psf(const SieveParams& sieve, double wavelength, double plane_distance,
                 int kernel_size, double pixel_pitch);

// Wavelengths whose focal planes are uniformly spaced, `separation_dof`
// depths of focus (measured at `first_wavelength`) apart. The first entry is
// `first_wavelength`; later ones are longer and focus closer to the lens.
std::vector<double> wavelengths_with_focal_separation(const SieveParams& sieve,
                                                      double first_wavelength, int count,
                                                      double separation_dof);

}  // namespace csbs
