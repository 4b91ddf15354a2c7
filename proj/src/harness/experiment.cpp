#include "csbs/harness/experiment.hpp"

#include <omp.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "csbs/errors.hpp"
#include "csbs/harness/image_io.hpp"
#include "csbs/harness/plot.hpp"
#include "csbs/harness/sources.hpp"

namespace csbs::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

NoiseModel noise_model(const ExperimentConfig& config, double lambda) {
  NoiseModel m;
  m.lambda_reg = lambda;
  m.noiseless = config.noise.noiseless;
  m.snr_db = config.noise.snr_db;
  return m;
}

Scene prepare_scene(const ExperimentConfig& config, std::ostream& diagnostics) {
  Scene scene;
  scene.setup = SpectralSetup(config.wavelengths());
  scene.candidates = config.candidate_set();
  scene.pixel_pitch = config.pixel_pitch();
  const int S = scene.setup.size();
  const int N = config.imaging.side;

  scene.optics = stage("psf", [&] {
    PsfRequest request{config.sieve, scene.setup.wavelengths(), scene.candidates.plane_distances,
                       N, config.imaging.kernel_size, scene.pixel_pitch};
    return build_transfer_cached(request, config.output.psf_cache, diagnostics);
  });
  if (scene.optics.truncated_psfs.value_or(0) > 0)
    diagnostics << "warning: " << *scene.optics.truncated_psfs
                << " PSFs lost more than 5% of their energy to the " << config.imaging.kernel_size
                << " pixel crop\n";

  scene.prior = stage("prior", [&] {
    if (config.prior.kind == "power")
      return make_power_spectrum_prior(
          std::vector<std::vector<double>>(
              static_cast<std::size_t>(S),
              isotropic_power_spectrum(N, config.prior.amplitude, config.prior.corner)),
          N);
    return make_white_prior(S, N);
  });

  scene.source = stage("source", [&] {
    SourceCube cube = config.source.files.empty()
                          ? shapes_source(S, N, config.source.shapes_per_source, config.source.background,
                                          config.source.seed)
                          : load_sources(config.source.files, N);
    cube.wavelengths = scene.setup.wavelengths();
    return cube;
  });
  return scene;
}

ConfigurationResult evaluate_configuration(const ExperimentConfig& config, const Scene& scene,
                                           std::vector<int> multiplicity, double lambda) {
  const TransferCube& transfer = scene.optics.transfer;
  ConfigurationResult r;
  r.multiplicity = std::move(multiplicity);
  r.measurements = simulate_measurements(scene.source, transfer, expand_multiplicity(r.multiplicity),
                                         noise_model(config, lambda), config.noise.seed);
  r.reconstruction = map_reconstruct_fast(r.measurements, transfer, scene.prior, lambda);
  for (int s = 0; s < scene.source.sources(); ++s)
    r.ssim.push_back(ssim(scene.source.images[static_cast<std::size_t>(s)],
                          r.reconstruction.estimate.images[static_cast<std::size_t>(s)]));
  r.mean_ssim = mean_ssim(scene.source.images, r.reconstruction.estimate.images);
  r.cost = cost_fast(assemble_gram(transfer, r.multiplicity), scene.prior, lambda);
  return r;
}

LambdaSearchResult choose_lambda(const ExperimentConfig& config, const Scene& scene,
                                 const std::vector<int>& focal_multiplicity) {
  const auto grid = config.lambda_grid();
  return lambda_search(
      [&](double lambda) {
        return evaluate_configuration(config, scene, focal_multiplicity, lambda).mean_ssim;
      },
      grid);
}

SelectionState select_planes(const ExperimentConfig& config, const Scene& scene, double lambda) {
  GramCost cost(scene.optics.transfer, scene.prior, lambda, scene.candidates.initial_multiplicity);
  return run_csbs(scene.candidates, config.target_m, cost, TrialSchedule::parallel);
}

ExperimentReport run_single(const ExperimentConfig& config, std::ostream& diagnostics) {
  config.validate();
  ExperimentReport report;
  const Scene scene = prepare_scene(config, diagnostics);
  report.seconds.psf = scene.optics.seconds;
  report.wavelengths = scene.setup.wavelengths();
  report.candidate_distances = scene.candidates.plane_distances;
  report.lambda_grid = config.lambda_grid();
  report.truth = scene.source;
  report.noise_seed = config.noise.seed;
  report.source_seed = config.source.seed;
  report.pixel_pitch = scene.pixel_pitch;
  report.psf_cache_hit = scene.optics.cache_hit;
  report.truncated_psfs = scene.optics.truncated_psfs;

  const auto focal = stage("baseline", [&] {
    return focal_plane_config(config.sieve, scene.setup, config.target_m, scene.candidates);
  });

  auto t0 = Clock::now();
  report.lambda = stage("lambda_search", [&] { return choose_lambda(config, scene, focal); });
  report.seconds.lambda_search = since(t0);
  const double lambda = report.lambda.best_lambda;

  t0 = Clock::now();
  report.selection = stage("selection", [&] { return select_planes(config, scene, lambda); });
  report.seconds.selection = since(t0);

  t0 = Clock::now();
  report.focal = stage("reconstruction", [&] { return evaluate_configuration(config, scene, focal, lambda); });
  report.csbs = stage("reconstruction", [&] {
    return evaluate_configuration(config, scene, report.selection.multiplicity, lambda);
  });
  report.seconds.reconstruction = since(t0);
  return report;
}

std::string prepare_output_dir(const ExperimentConfig& config, const std::string& verb) {
  fs::path dir(config.output.directory);
  if (config.output.timestamped) {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
    fs::path base = dir / (std::string(stamp) + "-" + verb);
    fs::path candidate = base;
    for (int k = 1; fs::exists(candidate); ++k) candidate = base.string() + "-" + std::to_string(k);
    dir = candidate;
  }
  fs::create_directories(dir);

  // config.json loads back as-is; derived values go alongside it.
  open_out(dir / "config.json") << to_json(config).dump(2) << '\n';
  const json resolved{{"wavelengths", config.wavelengths()},
                      {"candidate_distances", config.candidate_set().plane_distances},
                      {"pixel_pitch", config.pixel_pitch()},
                      {"lambda_grid", config.lambda_grid()}};
  open_out(dir / "resolved.json") << resolved.dump(2) << '\n';
  return dir.string();
}

void write_selection_csv(const SelectionState& selection, const std::string& path) {
  auto out = open_out(path);
  out << "iteration,eliminated_distance_m,cost\n";
  for (std::size_t i = 0; i < selection.history.size(); ++i)
    out << i + 1 << ',' << format_double(selection.history[i].distance) << ','
        << format_double(selection.history[i].cost) << '\n';
}

void write_configuration_csv(const CandidateSet& candidates, const std::vector<int>& csbs,
                             const std::vector<int>& focal, const std::string& path) {
  auto out = open_out(path);
  out << "plane,distance_m,csbs_copies,focal_copies\n";
  for (int c = 0; c < candidates.size(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    out << c << ',' << format_double(candidates.plane_distances[i]) << ','
        << (i < csbs.size() ? csbs[i] : 0) << ',' << (i < focal.size() ? focal[i] : 0) << '\n';
  }
}

void write_report(const ExperimentReport& r, const ExperimentConfig& config, const std::string& directory) {
  const fs::path dir(directory);
  write_selection_csv(r.selection, (dir / "selection.csv").string());
  CandidateSet grid;
  grid.plane_distances = r.candidate_distances;
  write_configuration_csv(grid, r.csbs.multiplicity, r.focal.multiplicity,
                          (dir / "configuration.csv").string());
  {
    auto out = open_out(dir / "ssim.csv");
    out << "source,wavelength_m,ssim_csbs,ssim_focal\n";
    for (std::size_t s = 0; s < r.wavelengths.size(); ++s)
      out << s << ',' << format_double(r.wavelengths[s]) << ',' << format_double(r.csbs.ssim[s]) << ','
          << format_double(r.focal.ssim[s]) << '\n';
  }
  {
    auto out = open_out(dir / "lambda_search.csv");
    out << "lambda,ssim_focal\n";
    for (std::size_t i = 0; i < r.lambda_grid.size(); ++i)
      out << format_double(r.lambda_grid[i]) << ',' << format_double(r.lambda.scores[i]) << '\n';
  }

  fs::create_directories(dir / "images");
  for (std::size_t s = 0; s < r.truth.images.size(); ++s) {
    const std::string tag = std::to_string(s);
    write_image_artifacts((dir / "images" / ("source_" + tag)).string(), r.truth.images[s]);
    write_image_artifacts((dir / "images" / ("csbs_" + tag)).string(), r.csbs.reconstruction.estimate.images[s]);
    write_image_artifacts((dir / "images" / ("focal_" + tag)).string(),
                          r.focal.reconstruction.estimate.images[s]);
  }

  json history = json::array();
  for (const auto& h : r.selection.history)
    history.push_back({{"plane", h.plane}, {"distance_m", h.distance}, {"cost", h.cost}});
  const json report{
      {"wavelengths_m", r.wavelengths},
      {"candidate_distances_m", r.candidate_distances},
      {"pixel_pitch_m", r.pixel_pitch},
      {"lambda", {{"chosen", r.lambda.best_lambda}, {"grid", r.lambda_grid}, {"focal_ssim", r.lambda.scores}}},
      {"csbs",
       {{"multiplicity", r.csbs.multiplicity},
        {"ssim", r.csbs.ssim},
        {"mean_ssim", r.csbs.mean_ssim},
        {"cost", r.csbs.cost},
        {"noise_variance", r.csbs.measurements.noise_variance},
        {"max_imag_residual", r.csbs.reconstruction.max_imag_residual}}},
      {"focal",
       {{"multiplicity", r.focal.multiplicity},
        {"ssim", r.focal.ssim},
        {"mean_ssim", r.focal.mean_ssim},
        {"cost", r.focal.cost},
        {"noise_variance", r.focal.measurements.noise_variance},
        {"max_imag_residual", r.focal.reconstruction.max_imag_residual}}},
      {"selection",
       {{"initial_cost", r.selection.initial_cost},
        {"evaluations", r.selection.evaluations},
        {"history", history}}},
      {"seeds", {{"noise", r.noise_seed}, {"source", r.source_seed}}},
      {"psf", {{"cache_hit", r.psf_cache_hit},
               {"truncated", r.truncated_psfs ? json(*r.truncated_psfs) : json(nullptr)}}},
      {"seconds",
       {{"psf", r.seconds.psf},
        {"lambda_search", r.seconds.lambda_search},
        {"selection", r.seconds.selection},
        {"reconstruction", r.seconds.reconstruction}}},
      {"config", to_json(config)},
  };
  open_out(dir / "report.json") << report.dump(2) << '\n';
}

int SweepResult::failures() const {
  int n = 0;
  for (const auto& r : rows) n += r.ok ? 0 : 1;
  return n;
}

std::vector<SweepCell> sweep_cells(const ExperimentConfig& config) {
  std::vector<SweepCell> cells;
  std::uint64_t index = 0;
  for (int s : config.sweep.sources)
    for (double snr : config.sweep.snr_db)
      for (double sep : config.sweep.separation_dof)
        cells.push_back({s, snr, sep, config.noise.seed ^ index++});
  return cells;
}

ExperimentConfig cell_config(const ExperimentConfig& config, const SweepCell& cell) {
  ExperimentConfig c = config;
  c.spectrum.wavelengths.clear();
  c.spectrum.sources = cell.sources;
  c.spectrum.separation_dof = cell.separation_dof;
  c.noise.snr_db = cell.snr_db;
  c.noise.noiseless = false;
  c.noise.seed = cell.noise_seed;
  return c;
}

SweepResult run_sweep(const ExperimentConfig& config, int workers, std::ostream& diagnostics) {
  const auto cells = sweep_cells(config);
  if (cells.empty()) throw ConfigError("sweep has an empty axis");
  SweepResult result;
  result.rows.resize(cells.size());
  std::vector<std::string> logs(cells.size());
  std::atomic<std::size_t> next{0};
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));

  auto work = [&] {
    if (threads > 1) omp_set_num_threads(1);
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      SweepRow& row = result.rows[i];
      row.cell = cells[i];
      std::ostringstream log;
      try {
        const ExperimentConfig c = cell_config(config, cells[i]);
        c.validate();
        const ExperimentReport r = run_single(c, log);
        row.ssim_csbs = r.csbs.mean_ssim;
        row.ssim_focal = r.focal.mean_ssim;
        row.lambda = r.lambda.best_lambda;
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
        log << "cell S=" << cells[i].sources << " snr=" << cells[i].snr_db
            << " sep=" << cells[i].separation_dof << " failed: " << e.what() << '\n';
      }
      logs[i] = log.str();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& l : logs) diagnostics << l;
  return result;
}

void write_sweep(const SweepResult& result, const ExperimentConfig& config, const std::string& directory) {
  const fs::path dir(directory);
  {
    auto out = open_out(dir / "sweep.csv");
    out << "S,snr_db,sep_dof,ssim_csbs,ssim_focal\n";
    for (const auto& r : result.rows)
      if (r.ok)
        out << r.cell.sources << ',' << format_double(r.cell.snr_db) << ','
            << format_double(r.cell.separation_dof) << ',' << format_double(r.ssim_csbs) << ','
            << format_double(r.ssim_focal) << '\n';
  }
  {
    auto out = open_out(dir / "sweep_details.csv");
    out << "cell,S,snr_db,sep_dof,noise_seed,lambda,status\n";
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
      const auto& r = result.rows[i];
      std::string status = r.ok ? "ok" : r.error;
      for (char& ch : status)
        if (ch == ',' || ch == '\n') ch = ';';
      out << i << ',' << r.cell.sources << ',' << format_double(r.cell.snr_db) << ','
          << format_double(r.cell.separation_dof) << ',' << r.cell.noise_seed << ','
          << format_double(r.lambda) << ',' << status << '\n';
    }
  }
  open_out(dir / "sweep.svg") << sweep_svg(result, config.sweep);
}

}  // namespace csbs::harness
