#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "csbs/image.hpp"

namespace csbs {

// Gaussian-windowed SSIM with the conventional constants. Only windows that
// fit entirely inside the image are scored. When `dynamic_range` is unset the
// reference image's max - min is used.
struct SsimParams {
  int window = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  std::optional<double> dynamic_range;

  void validate() const;
};

double ssim(const Image& reference, const Image& test, const SsimParams& params = {});
double mean_ssim(std::span<const Image> reference, std::span<const Image> test,
                 const SsimParams& params = {});

double sse(const Image& a, const Image& b);
double psnr(const Image& a, const Image& b, double peak);

// Raised when the experiment closure fails for one grid value.
class LambdaSearchError : public std::runtime_error {
 public:
  LambdaSearchError(double lambda, const std::string& what)
      : std::runtime_error("lambda " + std::to_string(lambda) + ": " + what), lambda_(lambda) {}
  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

struct LambdaSearchResult {
  double best_lambda = 0.0;
  std::size_t best_index = 0;
  std::vector<double> scores;  // one per grid value, grid order
};

// argmax of `score` over the grid; ties go to the smallest lambda.
LambdaSearchResult lambda_search(const std::function<double(double)>& score,
                                 std::span<const double> grid);

// `count` log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

}  // namespace csbs
