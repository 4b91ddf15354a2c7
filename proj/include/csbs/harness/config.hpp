#pragma once

// Experiment configuration. A config file is a JSON object; every key is
// optional and falls back to the defaults in default_config_json(). Unknown
// keys are rejected so typos fail loudly.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csbs/optics.hpp"
#include "csbs/selector.hpp"

namespace csbs::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpectrumConfig {
  std::vector<double> wavelengths;  // explicit list wins when non-empty
  double first_wavelength = 33.4e-9;
  int sources = 2;
  double separation_dof = 3.0;
};

struct CandidateConfig {
  int count = 30;
  int copies = 12;
  double margin_dof = 5.0;
  std::optional<double> min_distance;
  std::optional<double> max_distance;
};

struct ImagingConfig {
  int side = 64;
  int kernel_size = 31;
  std::optional<double> pixel_pitch;  // default: default_pixel_pitch(sieve)
};

struct NoiseConfig {
  std::optional<double> snr_db = 15.0;  // unset: variance = lambda
  bool noiseless = false;
  std::uint64_t seed = 1;
};

struct LambdaConfig {
  std::optional<double> fixed;
  double min = 1e-4;
  double max = 1e2;
  int count = 20;
};

struct PriorConfig {
  std::string kind = "white";  // white | power
  double amplitude = 1.0;
  double corner = 8.0;
};

struct SourceConfig {
  std::string generator = "shapes";  // used when files is empty
  std::uint64_t seed = 7;
  int shapes_per_source = 3;
  double background = 0.2;
  std::vector<std::string> files;  // one grayscale PNG or raw array per source
};

struct OutputConfig {
  std::string directory = "csbs_out";
  bool timestamped = true;
  std::string psf_cache;  // directory; empty disables caching
};

struct SweepConfig {
  std::vector<int> sources{2, 3, 4};
  std::vector<double> snr_db{5.0, 15.0, 25.0};
  std::vector<double> separation_dof{1.0, 2.0, 3.0, 5.0, 10.0, 15.0};
};

struct ExperimentConfig {
  SieveParams sieve;
  SpectrumConfig spectrum;
  CandidateConfig candidates;
  int target_m = 12;
  ImagingConfig imaging;
  NoiseConfig noise;
  LambdaConfig lambda;
  PriorConfig prior;
  SourceConfig source;
  OutputConfig output;
  SweepConfig sweep;

  // Throws ConfigError on any inconsistent field. Does not touch the
  // filesystem except to check that source files exist.
  void validate() const;

  std::vector<double> wavelengths() const;
  double pixel_pitch() const;
  CandidateSet candidate_set() const;
  std::vector<double> lambda_grid() const;
};

nlohmann::json default_config_json();

// Merge `patch` onto the defaults, apply `key.path=value` overrides, parse.
ExperimentConfig parse_config(const nlohmann::json& patch, std::span<const std::string> overrides = {});
ExperimentConfig load_config(const std::string& path, std::span<const std::string> overrides = {});

nlohmann::json to_json(const ExperimentConfig& config);

// Applies one `a.b.c=value` override; value is parsed as JSON when it is
// valid JSON and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace csbs::harness
