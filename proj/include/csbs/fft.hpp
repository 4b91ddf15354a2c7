#pragma once

#include <complex>
#include <memory>
#include <span>

namespace csbs {

using cd = std::complex<double>;

// Square 2D complex DFT backed by FFTW. Forward is unnormalized; inverse
// divides by n*n so inverse(forward(x)) == x. Plans are created with
// FFTW_ESTIMATE on aligned internal buffers, so results do not depend on the
// caller's memory alignment. Instances are not shareable across threads;
// construction and destruction are serialized internally.
class Fft2 {
 public:
  explicit Fft2(int n);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;
  Fft2(Fft2&&) noexcept;
  Fft2& operator=(Fft2&&) noexcept;

  int side() const { return n_; }

  void forward(std::span<const cd> in, std::span<cd> out);
  void forward(std::span<const double> in, std::span<cd> out);
  void inverse(std::span<const cd> in, std::span<cd> out);

 private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace csbs
