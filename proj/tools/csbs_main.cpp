// csbs: measurement-plane selection experiments for diffractive spectral
// imaging.
//
//   csbs psf         -c cfg.json    PSFs for every (candidate plane, wavelength)
//   csbs select      -c cfg.json    lambda search + CSBS, selection trace
//   csbs reconstruct -c cfg.json    simulate + MAP for a given plane list
//   csbs run         -c cfg.json    the full single experiment
//   csbs sweep       -c cfg.json    grid over S x SNR x separation
//
// Exit codes: 0 success, 1 config error, 2 numerical or runtime failure,
// 3 sweep finished with failed cells.

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "csbs/harness/config.hpp"
#include "csbs/harness/experiment.hpp"
#include "csbs/harness/image_io.hpp"
#include "csbs/harness/psf_cache.hpp"

namespace fs = std::filesystem;
using namespace csbs;
using namespace csbs::harness;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  bool no_timestamp = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, Common& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file (defaults used when omitted)");
  cmd->add_option("--set", o.overrides, "override a config value, e.g. --set noise.snr_db=20")
      ->take_all();
  cmd->add_option("-o,--out", o.out, "output directory (overrides output.directory)");
  cmd->add_flag("--no-timestamp", o.no_timestamp, "write directly into the output directory");
  cmd->add_option("-w,--workers", o.workers, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
}

ExperimentConfig load(const Common& o) {
  ExperimentConfig cfg = o.config_path.empty() ? parse_config(nlohmann::json::object(), o.overrides)
                                                : load_config(o.config_path, o.overrides);
  if (!o.out.empty()) cfg.output.directory = o.out;
  if (o.no_timestamp) cfg.output.timestamped = false;
  return cfg;
}

std::vector<int> parse_plane_list(const std::string& text, int planes) {
  std::vector<int> mult(static_cast<std::size_t>(planes), 0);
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    int idx = -1;
    try {
      idx = std::stoi(item);
    } catch (const std::exception&) {
      throw ConfigError("--planes entry '" + item + "' is not an integer");
    }
    if (idx < 0 || idx >= planes) throw ConfigError("--planes index " + item + " outside the candidate grid");
    ++mult[static_cast<std::size_t>(idx)];
  }
  return mult;
}

int cmd_psf(const Common& o) {
  const ExperimentConfig cfg = load(o);
  const std::string dir = prepare_output_dir(cfg, "psf");
  const auto cands = cfg.candidate_set();
  const PsfRequest req{cfg.sieve, cfg.wavelengths(), cands.plane_distances, cfg.imaging.side,
                       cfg.imaging.kernel_size, cfg.pixel_pitch()};
  const PsfTable psfs = synthesize_psfs(req);
  fs::create_directories(fs::path(dir) / "psfs");
  std::ofstream csv(fs::path(dir) / "psfs.csv");
  csv << "plane,distance_m,source,wavelength_m,peak,crop_energy_fraction,truncated\n";
  for (std::size_t c = 0; c < psfs.size(); ++c)
    for (std::size_t s = 0; s < psfs[c].size(); ++s) {
      const Psf& p = psfs[c][s];
      double peak = 0.0;
      for (double v : p.grid.pixels) peak = std::max(peak, v);
      csv << c << ',' << format_double(p.plane_distance) << ',' << s << ',' << format_double(p.wavelength)
          << ',' << format_double(peak) << ',' << format_double(p.crop_energy_fraction) << ','
          << (p.truncated ? 1 : 0) << '\n';
      write_image_artifacts(
          (fs::path(dir) / "psfs" / ("psf_p" + std::to_string(c) + "_s" + std::to_string(s))).string(), p.grid);
    }
  std::cout << dir << '\n';
  return 0;
}

int cmd_select(const Common& o) {
  const ExperimentConfig cfg = load(o);
  const std::string dir = prepare_output_dir(cfg, "select");
  const Scene scene = prepare_scene(cfg, std::cerr);
  const auto focal = focal_plane_config(cfg.sieve, scene.setup, cfg.target_m, scene.candidates);
  const auto lambda = choose_lambda(cfg, scene, focal);
  const auto state = select_planes(cfg, scene, lambda.best_lambda);
  write_selection_csv(state, (fs::path(dir) / "selection.csv").string());
  write_configuration_csv(scene.candidates, state.multiplicity, focal, (fs::path(dir) / "configuration.csv").string());
  std::cout << dir << "\nlambda " << lambda.best_lambda << ", cost " << state.initial_cost << " -> "
            << state.final_cost() << " after " << state.history.size() << " eliminations ("
            << state.evaluations << " evaluations)\n";
  return 0;
}

int cmd_reconstruct(const Common& o, const std::string& planes) {
  const ExperimentConfig cfg = load(o);
  const std::string dir = prepare_output_dir(cfg, "reconstruct");
  const Scene scene = prepare_scene(cfg, std::cerr);
  const auto focal = focal_plane_config(cfg.sieve, scene.setup, cfg.target_m, scene.candidates);
  const auto mult = planes.empty() ? focal : parse_plane_list(planes, scene.candidates.size());
  const double lambda = choose_lambda(cfg, scene, focal).best_lambda;
  const auto result = evaluate_configuration(cfg, scene, mult, lambda);
  fs::create_directories(fs::path(dir) / "images");
  std::ofstream csv(fs::path(dir) / "ssim.csv");
  csv << "source,wavelength_m,ssim\n";
  for (std::size_t s = 0; s < result.ssim.size(); ++s) {
    csv << s << ',' << format_double(scene.setup.wavelengths()[s]) << ',' << format_double(result.ssim[s]) << '\n';
    write_image_artifacts((fs::path(dir) / "images" / ("recon_" + std::to_string(s))).string(),
                          result.reconstruction.estimate.images[s]);
    write_image_artifacts((fs::path(dir) / "images" / ("source_" + std::to_string(s))).string(),
                          scene.source.images[s]);
  }
  std::cout << dir << "\nlambda " << lambda << ", mean SSIM " << result.mean_ssim << '\n';
  return 0;
}

int cmd_run(const Common& o) {
  const ExperimentConfig cfg = load(o);
  const std::string dir = prepare_output_dir(cfg, "run");
  const ExperimentReport r = run_single(cfg, std::cerr);
  write_report(r, cfg, dir);
  std::cout << dir << "\nlambda " << r.lambda.best_lambda << ", mean SSIM csbs " << r.csbs.mean_ssim
            << ", focal " << r.focal.mean_ssim << '\n';
  return 0;
}

int cmd_sweep(const Common& o) {
  const ExperimentConfig cfg = load(o);
  const std::string dir = prepare_output_dir(cfg, "sweep");
  const int workers = o.workers > 0 ? o.workers : 1;
  const SweepResult r = run_sweep(cfg, workers, std::cerr);
  write_sweep(r, cfg, dir);
  std::cout << dir << '\n' << r.rows.size() - static_cast<std::size_t>(r.failures()) << " of "
            << r.rows.size() << " cells succeeded\n";
  return r.failures() > 0 ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-plane selection for diffractive spectral imaging"};
  app.require_subcommand(1);
  Common common;
  std::string planes;
  auto* psf = app.add_subcommand("psf", "synthesize PSFs for every candidate plane and wavelength");
  auto* select = app.add_subcommand("select", "choose lambda on the focal baseline and run CSBS");
  auto* reconstruct = app.add_subcommand("reconstruct", "simulate and reconstruct one configuration");
  auto* run = app.add_subcommand("run", "full single experiment: select, reconstruct, score");
  auto* sweep = app.add_subcommand("sweep", "sweep sources x SNR x separation");
  for (auto* cmd : {psf, select, reconstruct, run, sweep}) add_common(cmd, common);
  reconstruct->add_option("--planes", planes,
                          "comma-separated candidate indices, repeated for copies (default: focal planes)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  // Sweeps parallelize over cells; single runs hand the workers to OpenMP.
  if (common.workers > 0 && !sweep->parsed()) omp_set_num_threads(common.workers);

  try {
    if (psf->parsed()) return cmd_psf(common);
    if (select->parsed()) return cmd_select(common);
    if (reconstruct->parsed()) return cmd_reconstruct(common, planes);
    if (run->parsed()) return cmd_run(common);
    return cmd_sweep(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
