#include "csbs/optics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "csbs/fft.hpp"

namespace csbs {

void SieveParams::validate() const {
  if (!(diameter > 0.0)) throw std::invalid_argument("sieve diameter must be positive");
  if (!(smallest_zone_width > 0.0))
    throw std::invalid_argument("smallest zone width must be positive");
  if (!(smallest_zone_width < diameter / 10.0))
    throw std::invalid_argument("smallest zone width must be below diameter / 10");
  if (pupil_samples < 64 || pupil_samples % 2 != 0)
    throw std::invalid_argument("pupil_samples must be even and at least 64");
}

SpectralSetup::SpectralSetup(std::vector<double> wavelengths) : wavelengths_(std::move(wavelengths)) {
  if (wavelengths_.empty()) throw std::invalid_argument("spectral setup needs at least one wavelength");
  for (std::size_t i = 0; i < wavelengths_.size(); ++i) {
    if (!(wavelengths_[i] > 0.0)) throw std::invalid_argument("wavelengths must be positive");
    if (i > 0 && !(wavelengths_[i] > wavelengths_[i - 1]))
      throw std::invalid_argument("wavelengths must be strictly increasing");
  }
}

double focal_length(const SieveParams& sieve, double wavelength) {
  if (!(wavelength > 0.0)) throw std::invalid_argument("focal_length: wavelength must be positive");
  return sieve.diameter * sieve.smallest_zone_width / wavelength;
}

double depth_of_focus(const SieveParams& sieve, double wavelength) {
  if (!(wavelength > 0.0))
    throw std::invalid_argument("depth_of_focus: wavelength must be positive");
  return 2.0 * sieve.smallest_zone_width * sieve.smallest_zone_width / wavelength;
}

double default_pixel_pitch(const SieveParams& sieve) {
  return 2.44 * sieve.smallest_zone_width / 5.0;
}

Psf generate_psf(const SieveParams& sieve, double wavelength, double plane_distance,
                 int kernel_size, double pixel_pitch) {
  sieve.validate();
  if (!(wavelength > 0.0)) throw std::invalid_argument("generate_psf: wavelength must be positive");
  if (!(plane_distance > 0.0))
    throw std::invalid_argument("generate_psf: plane distance must be positive");
  if (!(pixel_pitch > 0.0)) throw std::invalid_argument("generate_psf: pixel pitch must be positive");
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw std::invalid_argument("generate_psf: kernel size must be odd");
  const int n = sieve.pupil_samples;
  if (kernel_size > n)
    throw std::invalid_argument("generate_psf: kernel size " + std::to_string(kernel_size) +
                                " exceeds pupil_samples " + std::to_string(n));

  // Pupil sample spacing that maps DFT bins onto detector pixels of the
  // requested pitch.
  const double spacing = wavelength * plane_distance / (n * pixel_pitch);
  const double radius = 0.5 * sieve.diameter;
  if (!(radius < 0.5 * n * spacing))
    throw std::invalid_argument(
        "generate_psf: pixel pitch too coarse, pupil does not fit the sampling grid");

  const double defocus = std::numbers::pi / wavelength *
                         (1.0 / plane_distance - 1.0 / focal_length(sieve, wavelength));
  const double r2max = radius * radius;
  std::vector<cd> pupil(static_cast<std::size_t>(n) * n, cd{0.0, 0.0});
  for (int iy = 0; iy < n; ++iy) {
    const double y = (iy - n / 2) * spacing;
    for (int ix = 0; ix < n; ++ix) {
      const double x = (ix - n / 2) * spacing;
      const double r2 = x * x + y * y;
      if (r2 <= r2max) {
        const double phase = defocus * r2;
        pupil[static_cast<std::size_t>(iy) * n + ix] = {std::cos(phase), std::sin(phase)};
      }
    }
  }

  std::vector<cd> field(pupil.size());
  Fft2 fft(n);
  fft.forward(pupil, field);

  double total = 0.0;
  for (const cd& v : field) total += std::norm(v);

  Psf psf;
  psf.grid = Image(kernel_size, kernel_size);
  psf.pixel_pitch = pixel_pitch;
  psf.plane_distance = plane_distance;
  psf.wavelength = wavelength;

  // Zero frequency sits at bin 0; the crop is centered on it with wraparound.
  const int half = kernel_size / 2;
  double crop = 0.0;
  for (int r = 0; r < kernel_size; ++r) {
    const int fy = ((r - half) % n + n) % n;
    for (int c = 0; c < kernel_size; ++c) {
      const int fx = ((c - half) % n + n) % n;
      const double v = std::norm(field[static_cast<std::size_t>(fy) * n + fx]);
      psf.grid(r, c) = v;
      crop += v;
    }
  }
  if (!(crop > 0.0)) throw std::runtime_error("generate_psf: PSF crop carries no energy");
  for (double& v : psf.grid.pixels) v /= crop;
  psf.crop_energy_fraction = crop / total;
  psf.truncated = (1.0 - psf.crop_energy_fraction) > kTruncationWarningFraction;
  return psf;
}

std::vector<double> wavelengths_with_focal_separation(const SieveParams& sieve,
                                                      double first_wavelength, int count,
                                                      double separation_dof) {
  if (count < 1) throw std::invalid_argument("wavelength count must be at least 1");
  if (!(separation_dof > 0.0) && count > 1)
    throw std::invalid_argument("focal separation must be positive");
  const double f0 = focal_length(sieve, first_wavelength);
  const double dof = depth_of_focus(sieve, first_wavelength);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    const double f = f0 - s * separation_dof * dof;
    if (!(f > 0.0)) throw std::invalid_argument("focal separation pushes a focus behind the lens");
    out.push_back(s == 0 ? first_wavelength : sieve.diameter * sieve.smallest_zone_width / f);
  }
  return out;
}

}  // namespace csbs
