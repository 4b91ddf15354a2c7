#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "csbs/optics.hpp"

using namespace csbs;

namespace {

SieveParams desk_lens(int pupil_samples = 256) {
  SieveParams s;
  s.diameter = 0.01;
  s.smallest_zone_width = 5e-6;
  s.pupil_samples = pupil_samples;
  return s;
}

double peak(const Image& im) { return *std::max_element(im.pixels.begin(), im.pixels.end()); }

}  // namespace

TEST_CASE("focal length is D * dr / lambda") {
  const auto lens = desk_lens();
  CHECK(focal_length(lens, 33.4e-9) == doctest::Approx(1.4970059880).epsilon(1e-10));
  CHECK(focal_length(lens, 33.5e-9) == doctest::Approx(1.4925373134).epsilon(1e-10));
  CHECK(focal_length(lens, 2 * 33.4e-9) == doctest::Approx(focal_length(lens, 33.4e-9) / 2));
  CHECK(focal_length(lens, 33.4e-9) > focal_length(lens, 33.5e-9));
  CHECK_THROWS_AS(focal_length(lens, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(focal_length(lens, -1e-9), std::invalid_argument);
}

TEST_CASE("depth of focus is 2 dr^2 / lambda") {
  const auto lens = desk_lens();
  CHECK(depth_of_focus(lens, 33.4e-9) == doctest::Approx(1.497e-3).epsilon(1e-3));
  CHECK(depth_of_focus(lens, 66.8e-9) == doctest::Approx(depth_of_focus(lens, 33.4e-9) / 2));
  CHECK_THROWS_AS(depth_of_focus(lens, 0.0), std::invalid_argument);

  const double sep = focal_length(lens, 33.4e-9) - focal_length(lens, 33.5e-9);
  CHECK(sep == doctest::Approx(4.47e-3).epsilon(1e-3));
  CHECK(sep / depth_of_focus(lens, 33.4e-9) == doctest::Approx(2.99).epsilon(2e-3));
}

TEST_CASE("sieve and spectral setup validation") {
  SieveParams bad = desk_lens();
  bad.pupil_samples = 63;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = desk_lens();
  bad.smallest_zone_width = 0.002;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(SpectralSetup({33.5e-9, 33.4e-9}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralSetup(std::vector<double>{}), std::invalid_argument);
  CHECK(SpectralSetup({33.4e-9, 33.5e-9}).size() == 2);
}

TEST_CASE("generated PSF is unit sum, symmetric and deterministic") {
  const auto lens = desk_lens();
  const double lambda = 33.4e-9;
  const double f = focal_length(lens, lambda);
  const double pitch = default_pixel_pitch(lens);
  for (double offset : {0.0, 1.0, 3.0, -2.5}) {
    const double d = f + offset * depth_of_focus(lens, lambda);
    const Psf psf = generate_psf(lens, lambda, d, 21, pitch);
    double total = 0.0;
    for (double v : psf.grid.pixels) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
    const int n = psf.side();
    double worst = 0.0;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        worst = std::max(worst, std::abs(psf.grid(r, c) - psf.grid(c, r)));
        worst = std::max(worst, std::abs(psf.grid(r, c) - psf.grid(c, n - 1 - r)));
      }
    CHECK(worst < 1e-9);

    const Psf again = generate_psf(lens, lambda, d, 21, pitch);
    CHECK(again.grid.pixels == psf.grid.pixels);
  }
}

TEST_CASE("PSF matches direct-sum pupil integration") {
  const auto lens = desk_lens(128);
  const double lambda = 33.4e-9;
  const double f = focal_length(lens, lambda);
  const double pitch = default_pixel_pitch(lens);
  for (double offset : {0.0, 2.0}) {
    const double d = f + offset * depth_of_focus(lens, lambda);
    const Psf fast = generate_psf(lens, lambda, d, 15, pitch);
    const Image ref = oracle::pupil_psf(lens, lambda, d, 15, pitch);
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      worst = std::max(worst, std::abs(fast.grid.pixels[i] - ref.pixels[i]));
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("defocus by three depths of focus halves the peak") {
  // Reference brute-force integration at 1024 pupil samples.
  const auto lens = desk_lens(1024);
  const double lambda = 33.4e-9;
  const double f = focal_length(lens, lambda);
  const double pitch = default_pixel_pitch(lens);
  const Image focused = oracle::pupil_psf(lens, lambda, f, 15, pitch);
  const Image blurred = oracle::pupil_psf(lens, lambda, f + 3 * depth_of_focus(lens, lambda), 15, pitch);
  CHECK(peak(blurred) < 0.5 * peak(focused));

  const Psf fast = generate_psf(lens, lambda, f + 3 * depth_of_focus(lens, lambda), 15, pitch);
  CHECK(peak(fast.grid) < 0.5 * peak(generate_psf(lens, lambda, f, 15, pitch).grid));
}

TEST_CASE("in-focus plane gives the highest peak over a scan") {
  const auto lens = desk_lens();
  const double lambda = 33.5e-9;
  const double f = focal_length(lens, lambda);
  const double dof = depth_of_focus(lens, lambda);
  const double pitch = default_pixel_pitch(lens);
  int best = -1;
  double best_peak = -1.0;
  for (int i = -10; i <= 10; ++i) {
    const double p = peak(generate_psf(lens, lambda, f + 0.5 * i * dof, 21, pitch).grid);
    if (p > best_peak) {
      best_peak = p;
      best = i;
    }
  }
  CHECK(best == 0);
}

TEST_CASE("PSF depends only on the defocus coefficient and pupil sampling") {
  // (lambda, d) -> (2 lambda, d / 2) keeps lambda * d and the per-sample
  // defocus phase fixed.
  const auto lens = desk_lens();
  const double lambda = 33.4e-9;
  const double d = focal_length(lens, lambda) + 2.0 * depth_of_focus(lens, lambda);
  const double pitch = default_pixel_pitch(lens);
  const Psf a = generate_psf(lens, lambda, d, 21, pitch);
  const Psf b = generate_psf(lens, 2 * lambda, d / 2, 21, pitch);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.grid.size(); ++i)
    worst = std::max(worst, std::abs(a.grid.pixels[i] - b.grid.pixels[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("PSF argument errors and truncation flag") {
  const auto lens = desk_lens(64);
  const double lambda = 33.4e-9;
  const double f = focal_length(lens, lambda);
  const double pitch = default_pixel_pitch(lens);
  CHECK_THROWS_AS(generate_psf(lens, lambda, f, 65, pitch), std::invalid_argument);
  CHECK_THROWS_AS(generate_psf(lens, lambda, f, 20, pitch), std::invalid_argument);
  CHECK_THROWS_AS(generate_psf(lens, lambda, -1.0, 21, pitch), std::invalid_argument);
  CHECK_THROWS_AS(generate_psf(lens, lambda, f, 21, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(generate_psf(lens, lambda, f, 21, 10 * lens.smallest_zone_width),
                  std::invalid_argument);

  const Psf near = generate_psf(lens, lambda, f, 21, pitch);
  CHECK_FALSE(near.truncated);
  const Psf far = generate_psf(lens, lambda, f + 8 * depth_of_focus(lens, lambda), 5, pitch);
  CHECK(far.truncated);
  CHECK(far.crop_energy_fraction < 0.95);
}

TEST_CASE("wavelengths with uniform focal separation") {
  const auto lens = desk_lens();
  const auto w = wavelengths_with_focal_separation(lens, 33.4e-9, 3, 3.0);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == 33.4e-9);
  const double dof = depth_of_focus(lens, 33.4e-9);
  for (int s = 1; s < 3; ++s) {
    CHECK(w[s] > w[s - 1]);
    CHECK((focal_length(lens, w[s - 1]) - focal_length(lens, w[s])) / dof ==
          doctest::Approx(3.0).epsilon(1e-9));
  }
}
