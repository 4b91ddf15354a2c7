#include "csbs/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace csbs {

namespace {
// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft2::Impl {
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::size_t count = 0;

  explicit Impl(int n) : count(static_cast<std::size_t>(n) * n) {
    std::lock_guard lock(planner_mutex());
    in = fftw_alloc_complex(count);
    out = fftw_alloc_complex(count);
    forward = fftw_plan_dft_2d(n, n, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_2d(n, n, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(in);
    fftw_free(out);
  }

  cd* input() { return reinterpret_cast<cd*>(in); }
  const cd* output() const { return reinterpret_cast<const cd*>(out); }
};

Fft2::Fft2(int n) : n_(n) {
  if (n <= 0) throw std::invalid_argument("Fft2: side must be positive");
  impl_ = std::make_unique<Impl>(n);
}

Fft2::~Fft2() = default;
Fft2::Fft2(Fft2&&) noexcept = default;
Fft2& Fft2::operator=(Fft2&&) noexcept = default;

void Fft2::forward(std::span<const cd> in, std::span<cd> out) {
  if (in.size() != impl_->count || out.size() != impl_->count)
    throw std::invalid_argument("Fft2::forward: size mismatch");
  std::copy(in.begin(), in.end(), impl_->input());
  fftw_execute(impl_->forward);
  std::copy_n(impl_->output(), impl_->count, out.begin());
}

void Fft2::forward(std::span<const double> in, std::span<cd> out) {
  if (in.size() != impl_->count || out.size() != impl_->count)
    throw std::invalid_argument("Fft2::forward: size mismatch");
  cd* dst = impl_->input();
  for (std::size_t i = 0; i < impl_->count; ++i) dst[i] = cd{in[i], 0.0};
  fftw_execute(impl_->forward);
  std::copy_n(impl_->output(), impl_->count, out.begin());
}

void Fft2::inverse(std::span<const cd> in, std::span<cd> out) {
  if (in.size() != impl_->count || out.size() != impl_->count)
    throw std::invalid_argument("Fft2::inverse: size mismatch");
  std::copy(in.begin(), in.end(), impl_->input());
  fftw_execute(impl_->backward);
  const double scale = 1.0 / static_cast<double>(impl_->count);
  const cd* src = impl_->output();
  for (std::size_t i = 0; i < impl_->count; ++i) out[i] = src[i] * scale;
}

}  // namespace csbs
