#pragma once

// The end-to-end experiment: PSFs -> transfer cube -> lambda search on the
// focal-plane baseline -> CSBS at that lambda -> simulate and reconstruct
// both configurations with the same source and noise seed -> SSIM.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csbs/harness/config.hpp"
#include "csbs/harness/psf_cache.hpp"
#include "csbs/inverse.hpp"
#include "csbs/metrics.hpp"
#include "csbs/selector.hpp"

namespace csbs::harness {

// A failure inside one pipeline stage, tagged with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct Scene {
  SpectralSetup setup;
  CandidateSet candidates;
  double pixel_pitch = 0.0;
  TransferBuild optics;
  PriorSpec prior;
  SourceCube source;
};

Scene prepare_scene(const ExperimentConfig& config, std::ostream& diagnostics);

NoiseModel noise_model(const ExperimentConfig& config, double lambda);

struct ConfigurationResult {
  std::vector<int> multiplicity;
  MeasurementSet measurements;
  Reconstruction reconstruction;
  std::vector<double> ssim;  // per source
  double mean_ssim = 0.0;
  double cost = 0.0;         // cost_fast of the configuration at the chosen lambda
};

ConfigurationResult evaluate_configuration(const ExperimentConfig& config, const Scene& scene,
                                           std::vector<int> multiplicity, double lambda);

// Best lambda for the focal-plane configuration (or the fixed value).
LambdaSearchResult choose_lambda(const ExperimentConfig& config, const Scene& scene,
                                 const std::vector<int>& focal_multiplicity);

SelectionState select_planes(const ExperimentConfig& config, const Scene& scene, double lambda);

struct PhaseSeconds {
  double psf = 0.0;
  double lambda_search = 0.0;
  double selection = 0.0;
  double reconstruction = 0.0;
};

struct ExperimentReport {
  std::vector<double> wavelengths;
  std::vector<double> candidate_distances;
  std::vector<double> lambda_grid;
  LambdaSearchResult lambda;
  SelectionState selection;
  ConfigurationResult csbs;
  ConfigurationResult focal;
  SourceCube truth;
  std::uint64_t noise_seed = 0;
  std::uint64_t source_seed = 0;
  double pixel_pitch = 0.0;
  bool psf_cache_hit = false;
  std::optional<int> truncated_psfs;
  PhaseSeconds seconds;
};

ExperimentReport run_single(const ExperimentConfig& config, std::ostream& diagnostics);

// Creates `<output.directory>[/<timestamp>-<verb>]` and writes config.json.
std::string prepare_output_dir(const ExperimentConfig& config, const std::string& verb);

void write_report(const ExperimentReport& report, const ExperimentConfig& config,
                  const std::string& directory);
void write_selection_csv(const SelectionState& selection, const std::string& path);
void write_configuration_csv(const CandidateSet& candidates, const std::vector<int>& csbs,
                             const std::vector<int>& focal, const std::string& path);

struct SweepCell {
  int sources = 0;
  double snr_db = 0.0;
  double separation_dof = 0.0;
  std::uint64_t noise_seed = 0;  // base seed xor cell index
};

struct SweepRow {
  SweepCell cell;
  bool ok = false;
  double ssim_csbs = 0.0;
  double ssim_focal = 0.0;
  double lambda = 0.0;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // cell order, independent of scheduling
  int failures() const;
};

std::vector<SweepCell> sweep_cells(const ExperimentConfig& config);
ExperimentConfig cell_config(const ExperimentConfig& config, const SweepCell& cell);

// Cells run on up to `workers` threads; failed cells are recorded, not fatal.
SweepResult run_sweep(const ExperimentConfig& config, int workers, std::ostream& diagnostics);
void write_sweep(const SweepResult& result, const ExperimentConfig& config, const std::string& directory);

}  // namespace csbs::harness
