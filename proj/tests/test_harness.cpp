#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"

#include "csbs/harness/config.hpp"
#include "csbs/harness/experiment.hpp"
#include "csbs/harness/image_io.hpp"
#include "csbs/harness/psf_cache.hpp"
#include "csbs/harness/sources.hpp"

namespace fs = std::filesystem;
using namespace csbs;
using namespace csbs::harness;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("csbs_harness_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json small_patch() {
  return json{{"candidates", {{"count", 10}, {"margin_dof", 3.0}}},
              {"target_m", 4},
              {"imaging", {{"side", 32}, {"kernel_size", 15}}},
              {"lambda", {{"count", 5}}},
              {"source", {{"shapes_per_source", 2}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CSBS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

}  // namespace

TEST_CASE("defaults parse and validate") {
  const ExperimentConfig c = parse_config(json::object());
  CHECK(c.spectrum.sources == 2);
  CHECK(c.candidates.count == 30);
  CHECK(c.target_m == 12);
  CHECK(c.imaging.side == 64);
  CHECK(c.noise.snr_db.value() == 15.0);
  CHECK(c.lambda_grid().size() == 20);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("overrides and unknown keys") {
  const std::vector<std::string> ov{"noise.snr_db=25", "prior.kind=power", "spectrum.wavelengths=[3e-8,3.1e-8]"};
  const ExperimentConfig c = parse_config(json::object(), ov);
  CHECK(c.noise.snr_db.value() == 25.0);
  CHECK(c.prior.kind == "power");
  CHECK(c.wavelengths() == std::vector<double>{3e-8, 3.1e-8});

  CHECK_THROWS_AS(parse_config(json{{"noise", {{"snr", 3}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"bogus", 1}}), ConfigError);
  const std::vector<std::string> bad{"noise.snr=3"};
  CHECK_THROWS_AS(parse_config(json::object(), bad), ConfigError);
  const std::vector<std::string> section{"noise=3"};
  CHECK_THROWS_AS(parse_config(json::object(), section), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"imaging", {{"side", "big"}}}}), ConfigError);
}

TEST_CASE("null unsets optional keys only") {
  const ExperimentConfig c = parse_config(json{{"noise", {{"snr_db", nullptr}}}});
  CHECK_FALSE(c.noise.snr_db.has_value());
  CHECK_THROWS_AS(parse_config(json{{"target_m", nullptr}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"imaging", {{"side", nullptr}}}}), ConfigError);
}

TEST_CASE("to_json round-trips") {
  const std::vector<std::string> ov{"imaging.pixel_pitch=2e-6", "lambda.fixed=0.5", "noise.seed=99"};
  const ExperimentConfig a = parse_config(small_patch(), ov);
  const ExperimentConfig b = parse_config(to_json(a));
  CHECK(to_json(a) == to_json(b));
  CHECK(b.pixel_pitch() == 2e-6);
}

TEST_CASE("validation rejects inconsistent configs") {
  auto invalid = [](const json& patch) {
    CHECK_THROWS_AS(parse_config(patch).validate(), ConfigError);
  };
  invalid(json{{"imaging", {{"kernel_size", 30}}}});
  invalid(json{{"imaging", {{"kernel_size", 129}}}});
  invalid(json{{"target_m", 1}});
  invalid(json{{"candidates", {{"min_distance", 1.0}, {"max_distance", 1.1}}}});
  invalid(json{{"prior", {{"kind", "pink"}}}});
  invalid(json{{"source", {{"files", {"/nonexistent/a.png", "/nonexistent/b.png"}}}}});
  invalid(json{{"spectrum", {{"sources", 9}}}});
}

TEST_CASE("candidate grid brackets every focal length") {
  const ExperimentConfig c = parse_config(json{{"spectrum", {{"sources", 4}}}});
  const auto cands = c.candidate_set();
  CHECK(cands.size() == 30);
  for (double w : c.wavelengths()) {
    const double f = focal_length(c.sieve, w);
    CHECK(cands.plane_distances.front() < f);
    CHECK(cands.plane_distances.back() > f);
  }
}

TEST_CASE("raw images round-trip bit-exactly") {
  const fs::path dir = scratch("raw");
  Image img(3, 5);
  for (int i = 0; i < 15; ++i) img.pixels[static_cast<std::size_t>(i)] = 0.1 * i - 0.3 + 1e-17 * i;
  write_raw((dir / "a.raw").string(), img);
  const Image back = read_raw((dir / "a.raw").string());
  CHECK(back.rows == 3);
  CHECK(back.cols == 5);
  CHECK(back.pixels == img.pixels);
  CHECK_THROWS(read_raw((dir / "missing.raw").string()));
}

TEST_CASE("png artifacts are min-max normalized with a sidecar") {
  const fs::path dir = scratch("png");
  Image img(4, 4);
  for (int i = 0; i < 16; ++i) img.pixels[static_cast<std::size_t>(i)] = 2.0 + 0.5 * i;
  write_image_artifacts((dir / "img").string(), img);
  const Image png = read_png((dir / "img.png").string());
  for (int i = 0; i < 16; ++i) CHECK(png.pixels[static_cast<std::size_t>(i)] == doctest::Approx(i / 15.0).epsilon(0.003));
  const json side = json::parse(slurp(dir / "img.png.json"));
  CHECK(side["min"].get<double>() == 2.0);
  CHECK(side["max"].get<double>() == 9.5);
  CHECK(read_image((dir / "img.raw").string()).pixels == img.pixels);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("shape sources are deterministic and disjoint") {
  const SourceCube a = shapes_source(3, 64, 4, 0.2, 11);
  const SourceCube b = shapes_source(3, 64, 4, 0.2, 11);
  REQUIRE(a.images.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) CHECK(a.images[s].pixels == b.images[s].pixels);
  for (std::size_t i = 0; i < a.images[0].pixels.size(); ++i) {
    int lit = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double v = a.images[s].pixels[i];
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      if (v >= 0.5) ++lit;
    }
    CHECK(lit <= 1);
  }
  for (std::size_t s = 0; s < 3; ++s) {
    int lit = 0;
    for (double v : a.images[s].pixels) lit += v >= 0.5;
    CHECK(lit > 0);
  }
  const SourceCube c = shapes_source(3, 64, 4, 0.2, 12);
  CHECK(c.images[0].pixels != a.images[0].pixels);
}

TEST_CASE("psf cache hit, corruption and invalidation") {
  const fs::path dir = scratch("cache");
  const ExperimentConfig c = parse_config(small_patch());
  const PsfRequest req{c.sieve, c.wavelengths(), c.candidate_set().plane_distances, c.imaging.side,
                       c.imaging.kernel_size, c.pixel_pitch()};
  std::ostringstream diag;
  const TransferBuild cold = build_transfer_cached(req, dir.string(), diag);
  CHECK_FALSE(cold.cache_hit);
  const fs::path entry = dir / (cache_key(req) + ".trf");
  REQUIRE(fs::exists(entry));

  const TransferBuild warm = build_transfer_cached(req, dir.string(), diag);
  CHECK(warm.cache_hit);
  CHECK(warm.transfer.values() == cold.transfer.values());
  CHECK(load_psf_cache(entry.string(), req).values() == cold.transfer.values());
  CHECK(diag.str().empty());

  {
    std::fstream f(entry, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    f.write("garbage!", 8);
  }
  fs::resize_file(entry, fs::file_size(entry) - 16);
  std::ostringstream diag2;
  const TransferBuild healed = build_transfer_cached(req, dir.string(), diag2);
  CHECK_FALSE(healed.cache_hit);
  CHECK(diag2.str().find("warning") != std::string::npos);
  CHECK(healed.transfer.values() == cold.transfer.values());
  CHECK(build_transfer_cached(req, dir.string(), diag2).cache_hit);

  PsfRequest moved = req;
  moved.pixel_pitch *= 1.01;
  CHECK(cache_key(moved) != cache_key(req));
  PsfRequest sieve = req;
  sieve.sieve.pupil_samples = 512;
  CHECK(cache_key(sieve) != cache_key(req));
  PsfRequest dist = req;
  dist.distances.back() += 1e-9;
  CHECK(cache_key(dist) != cache_key(req));
  CHECK_THROWS(load_psf_cache(entry.string(), moved));
}

TEST_CASE("noiseless delta-like system reconstructs almost exactly") {
  json patch = small_patch();
  patch["spectrum"] = {{"sources", 1}};
  patch["imaging"]["kernel_size"] = 1;
  patch["noise"] = {{"noiseless", true}};
  patch["lambda"] = {{"fixed", 1e-8}};
  const ExperimentConfig c = parse_config(patch);
  c.validate();
  std::ostringstream diag;
  const ExperimentReport r = run_single(c, diag);
  CHECK(r.csbs.mean_ssim > 0.99);
  CHECK(r.focal.mean_ssim > 0.99);
}

TEST_CASE("run_single reports a consistent selection") {
  const ExperimentConfig c = parse_config(small_patch());
  std::ostringstream diag;
  const ExperimentReport r = run_single(c, diag);
  int total = 0;
  for (int m : r.csbs.multiplicity) total += m;
  CHECK(total == c.target_m);
  total = 0;
  for (int m : r.focal.multiplicity) total += m;
  CHECK(total == c.target_m);
  CHECK(r.lambda_grid.size() == 5);
  CHECK(r.csbs.cost <= r.selection.final_cost() * (1 + 1e-12));
  CHECK(r.csbs.ssim.size() == 2);
  for (std::size_t i = 1; i < r.selection.history.size(); ++i)
    CHECK(r.selection.history[i].cost >= r.selection.history[i - 1].cost);
}

TEST_CASE("one-cell sweep equals run_single for that cell") {
  json patch = small_patch();
  patch["sweep"] = {{"sources", {2}}, {"snr_db", {20.0}}, {"separation_dof", {4.0}}};
  const ExperimentConfig c = parse_config(patch);
  const auto cells = sweep_cells(c);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].noise_seed == (c.noise.seed ^ 0u));
  std::ostringstream diag;
  const SweepResult sweep = run_sweep(c, 1, diag);
  REQUIRE(sweep.rows.size() == 1);
  REQUIRE(sweep.rows[0].ok);
  const ExperimentReport single = run_single(cell_config(c, cells[0]), diag);
  CHECK(sweep.rows[0].ssim_csbs == single.csbs.mean_ssim);
  CHECK(sweep.rows[0].ssim_focal == single.focal.mean_ssim);
  CHECK(sweep.rows[0].lambda == single.lambda.best_lambda);
}

TEST_CASE("sweep cells are S-major with xor seeds") {
  json patch = small_patch();
  patch["noise"] = {{"seed", 5}};
  patch["sweep"] = {{"sources", {2, 3}}, {"snr_db", {5.0, 25.0}}, {"separation_dof", {1.0, 2.0, 3.0}}};
  const auto cells = sweep_cells(parse_config(patch));
  REQUIRE(cells.size() == 12);
  CHECK(cells[0].sources == 2);
  CHECK(cells[11].sources == 3);
  CHECK(cells[3].snr_db == 25.0);
  CHECK(cells[4].separation_dof == 2.0);
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(cells[i].noise_seed == (5u ^ i));
}

TEST_CASE("cli exit codes and reproducible csv output") {
  const fs::path dir = scratch("cli");
  write_json(dir / "small.json", small_patch());
  const std::string cfg = "-c " + (dir / "small.json").string();

  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("run " + cfg + " --set noise.bogus=1") == 1);
  CHECK(run_cli("run -c " + (dir / "missing.json").string()) == 1);

  CHECK(run_cli("run " + cfg + " --no-timestamp -o " + (dir / "a").string()) == 0);
  CHECK(run_cli("run " + cfg + " --no-timestamp -w 1 -o " + (dir / "b").string()) == 0);
  for (const char* name : {"selection.csv", "configuration.csv", "ssim.csv", "lambda_search.csv"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir / "a" / name));
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  CHECK(slurp(dir / "a" / "selection.csv").rfind("iteration,eliminated_distance_m,cost\n", 0) == 0);

  const ExperimentConfig reloaded = load_config((dir / "a" / "config.json").string());
  ExperimentConfig expected = load_config((dir / "small.json").string());
  expected.output.directory = (dir / "a").string();
  expected.output.timestamped = false;
  CHECK(to_json(reloaded) == to_json(expected));

  json sweep = small_patch();
  sweep["sweep"] = {{"sources", {2, 8}}, {"snr_db", {15.0}}, {"separation_dof", {3.0}}};
  write_json(dir / "sweep.json", sweep);
  CHECK(run_cli("sweep -c " + (dir / "sweep.json").string() + " --no-timestamp -o " + (dir / "s").string()) == 3);
  const std::string table = slurp(dir / "s" / "sweep.csv");
  CHECK(table.rfind("S,snr_db,sep_dof,ssim_csbs,ssim_focal\n", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 2);
  CHECK(fs::exists(dir / "s" / "sweep.svg"));
}

TEST_CASE("timestamped output directories do not collide") {
  const fs::path dir = scratch("stamp");
  ExperimentConfig c = parse_config(small_patch());
  c.output.directory = dir.string();
  const std::string a = prepare_output_dir(c, "run");
  const std::string b = prepare_output_dir(c, "run");
  CHECK(a != b);
  CHECK(fs::exists(fs::path(a) / "config.json"));
  CHECK(fs::path(a).filename().string().find("-run") != std::string::npos);
}

TEST_CASE("warm psf cache is much faster than synthesis") {
  const fs::path dir = scratch("warm");
  const ExperimentConfig c = parse_config(json::object());
  const PsfRequest req{c.sieve, c.wavelengths(), c.candidate_set().plane_distances, c.imaging.side,
                       c.imaging.kernel_size, c.pixel_pitch()};
  std::ostringstream diag;
  const TransferBuild cold = build_transfer_cached(req, dir.string(), diag);
  const TransferBuild warm = build_transfer_cached(req, dir.string(), diag);
  REQUIRE(warm.cache_hit);
  MESSAGE("cold " << cold.seconds << " s, warm " << warm.seconds << " s");
  CHECK(warm.seconds < 0.05 * cold.seconds);
}
