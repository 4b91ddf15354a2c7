#include "csbs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace csbs {

void SsimParams::validate() const {
  if (window < 3 || window % 2 == 0) throw std::invalid_argument("SSIM window must be odd and >= 3");
  if (!(window_sigma > 0.0)) throw std::invalid_argument("SSIM window sigma must be positive");
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw std::invalid_argument("SSIM constants must be positive");
  if (dynamic_range && !(*dynamic_range > 0.0))
    throw std::invalid_argument("SSIM dynamic range must be positive");
}

namespace {

void check_same_shape(const Image& a, const Image& b, const char* who) {
  if (a.rows != b.rows || a.cols != b.cols || a.size() != b.size())
    throw std::invalid_argument(std::string(who) + ": image shapes differ");
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const int half = size / 2;
  double total = 0.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double v = std::exp(-((x - half) * (x - half) + (y - half) * (y - half)) /
                                (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(y) * size + x] = v;
      total += v;
    }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

double ssim(const Image& reference, const Image& test, const SsimParams& params) {
  check_same_shape(reference, test, "ssim");
  params.validate();
  const int win = params.window;
  if (reference.rows < win || reference.cols < win)
    throw std::invalid_argument("ssim: image smaller than the SSIM window");

  double range = 0.0;
  if (params.dynamic_range) {
    range = *params.dynamic_range;
  } else {
    const auto [lo, hi] = std::minmax_element(reference.pixels.begin(), reference.pixels.end());
    range = *hi - *lo;
    if (!(range > 0.0))
      throw std::invalid_argument("ssim: reference is constant; pass an explicit dynamic range");
  }
  const double c1 = (params.k1 * range) * (params.k1 * range);
  const double c2 = (params.k2 * range) * (params.k2 * range);
  const auto weights = gaussian_window(win, params.window_sigma);

  double total = 0.0;
  std::size_t count = 0;
  for (int r0 = 0; r0 + win <= reference.rows; ++r0)
    for (int c0 = 0; c0 + win <= reference.cols; ++c0) {
      double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int y = 0; y < win; ++y)
        for (int x = 0; x < win; ++x) {
          const double w = weights[static_cast<std::size_t>(y) * win + x];
          const double a = reference(r0 + y, c0 + x);
          const double b = test(r0 + y, c0 + x);
          mx += w * a;
          my += w * b;
          sxx += w * a * a;
          syy += w * b * b;
          sxy += w * a * b;
        }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cov = sxy - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / static_cast<double>(count);
}

double mean_ssim(std::span<const Image> reference, std::span<const Image> test,
                 const SsimParams& params) {
  if (reference.size() != test.size() || reference.empty())
    throw std::invalid_argument("mean_ssim: image lists differ in length or are empty");
  double total = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) total += ssim(reference[i], test[i], params);
  return total / static_cast<double>(reference.size());
}

double sse(const Image& a, const Image& b) {
  check_same_shape(a, b, "sse");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    total += d * d;
  }
  return total;
}

double psnr(const Image& a, const Image& b, double peak) {
  const double err = sse(a, b);
  return 10.0 * std::log10(peak * peak * static_cast<double>(a.size()) / err);
}

LambdaSearchResult lambda_search(const std::function<double(double)>& score,
                                 std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("lambda_search: empty grid");
  for (double l : grid)
    if (!(l > 0.0)) throw std::invalid_argument("lambda_search: grid values must be positive");

  LambdaSearchResult result;
  result.scores.reserve(grid.size());
  for (double l : grid) {
    try {
      result.scores.push_back(score(l));
    } catch (const std::exception& e) {
      throw LambdaSearchError(l, e.what());
    }
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double best = result.scores[result.best_index];
    if (result.scores[i] > best ||
        (result.scores[i] == best && grid[i] < grid[result.best_index]))
      result.best_index = i;
  }
  result.best_lambda = grid[result.best_index];
  return result;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1)
    throw std::invalid_argument("log_grid: need 0 < lo <= hi and count >= 1");
  std::vector<double> out;
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i)
    out.push_back(count == 1 ? lo : std::pow(10.0, a + (b - a) * i / (count - 1)));
  return out;
}

}  // namespace csbs
