#include "csbs/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csbs/metrics.hpp"

namespace csbs::harness {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Every key in `doc` must exist in `reference` (null defaults still count).
void reject_unknown(const json& doc, const json& reference, const std::string& path) {
  if (!doc.is_object()) return;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!reference.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    if (reference[it.key()].is_object()) {
      if (!it.value().is_object()) throw ConfigError("config key '" + key + "' must be an object");
      reject_unknown(it.value(), reference[it.key()], key);
    }
  }
}

template <typename T>
T get(const json& doc, const char* section, const char* key) {
  const json& v = section ? doc.at(section).at(key) : doc.at(key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    const std::string name = section ? std::string(section) + "." + key : std::string(key);
    throw ConfigError("config key '" + name + "' has the wrong type");
  }
}

std::optional<double> get_optional(const json& doc, const char* section, const char* key) {
  const json& v = doc.at(section).at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number())
    throw ConfigError(std::string("config key '") + section + "." + key + "' must be a number or null");
  return v.get<double>();
}

}  // namespace

json default_config_json() {
  return to_json(ExperimentConfig{});
}

json to_json(const ExperimentConfig& c) {
  return json{
      {"sieve",
       {{"diameter", c.sieve.diameter},
        {"smallest_zone_width", c.sieve.smallest_zone_width},
        {"pupil_samples", c.sieve.pupil_samples}}},
      {"spectrum",
       {{"wavelengths", c.spectrum.wavelengths},
        {"first_wavelength", c.spectrum.first_wavelength},
        {"sources", c.spectrum.sources},
        {"separation_dof", c.spectrum.separation_dof}}},
      {"candidates",
       {{"count", c.candidates.count},
        {"copies", c.candidates.copies},
        {"margin_dof", c.candidates.margin_dof},
        {"min_distance", optional_number(c.candidates.min_distance)},
        {"max_distance", optional_number(c.candidates.max_distance)}}},
      {"target_m", c.target_m},
      {"imaging",
       {{"side", c.imaging.side},
        {"kernel_size", c.imaging.kernel_size},
        {"pixel_pitch", optional_number(c.imaging.pixel_pitch)}}},
      {"noise",
       {{"snr_db", optional_number(c.noise.snr_db)},
        {"noiseless", c.noise.noiseless},
        {"seed", c.noise.seed}}},
      {"lambda",
       {{"fixed", optional_number(c.lambda.fixed)},
        {"min", c.lambda.min},
        {"max", c.lambda.max},
        {"count", c.lambda.count}}},
      {"prior", {{"kind", c.prior.kind}, {"amplitude", c.prior.amplitude}, {"corner", c.prior.corner}}},
      {"source",
       {{"generator", c.source.generator},
        {"seed", c.source.seed},
        {"shapes_per_source", c.source.shapes_per_source},
        {"background", c.source.background},
        {"files", c.source.files}}},
      {"output",
       {{"directory", c.output.directory},
        {"timestamped", c.output.timestamped},
        {"psf_cache", c.output.psf_cache}}},
      {"sweep",
       {{"sources", c.sweep.sources},
        {"snr_db", c.sweep.snr_db},
        {"separation_dof", c.sweep.separation_dof}}},
  };
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  json* node = &doc;
  std::stringstream keys(path);
  std::string key;
  std::vector<std::string> parts;
  while (std::getline(keys, key, '.')) parts.push_back(key);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i]))
      throw ConfigError("override names unknown config key '" + path + "'");
    node = &(*node)[parts[i]];
  }
  if (node->is_object()) throw ConfigError("override '" + path + "' names a section, not a value");

  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  *node = std::move(value);
}

ExperimentConfig parse_config(const json& patch, std::span<const std::string> overrides) {
  if (!patch.is_object()) throw ConfigError("config root must be a JSON object");
  const json defaults = default_config_json();
  reject_unknown(patch, defaults, "");
  json doc = defaults;
  doc.merge_patch(patch);
  // merge_patch deletes keys set to null; put them back as explicit nulls.
  for (auto& [section, body] : defaults.items()) {
    if (!doc.contains(section)) doc[section] = body.is_object() ? json::object() : json(nullptr);
    if (body.is_object())
      for (auto& [k, v] : body.items())
        if (!doc[section].contains(k)) doc[section][k] = nullptr;
  }
  for (const auto& o : overrides) apply_override(doc, o);

  ExperimentConfig c;
  c.sieve.diameter = get<double>(doc, "sieve", "diameter");
  c.sieve.smallest_zone_width = get<double>(doc, "sieve", "smallest_zone_width");
  c.sieve.pupil_samples = get<int>(doc, "sieve", "pupil_samples");
  c.spectrum.wavelengths = get<std::vector<double>>(doc, "spectrum", "wavelengths");
  c.spectrum.first_wavelength = get<double>(doc, "spectrum", "first_wavelength");
  c.spectrum.sources = get<int>(doc, "spectrum", "sources");
  c.spectrum.separation_dof = get<double>(doc, "spectrum", "separation_dof");
  c.candidates.count = get<int>(doc, "candidates", "count");
  c.candidates.copies = get<int>(doc, "candidates", "copies");
  c.candidates.margin_dof = get<double>(doc, "candidates", "margin_dof");
  c.candidates.min_distance = get_optional(doc, "candidates", "min_distance");
  c.candidates.max_distance = get_optional(doc, "candidates", "max_distance");
  c.target_m = get<int>(doc, nullptr, "target_m");
  c.imaging.side = get<int>(doc, "imaging", "side");
  c.imaging.kernel_size = get<int>(doc, "imaging", "kernel_size");
  c.imaging.pixel_pitch = get_optional(doc, "imaging", "pixel_pitch");
  c.noise.snr_db = get_optional(doc, "noise", "snr_db");
  c.noise.noiseless = get<bool>(doc, "noise", "noiseless");
  c.noise.seed = get<std::uint64_t>(doc, "noise", "seed");
  c.lambda.fixed = get_optional(doc, "lambda", "fixed");
  c.lambda.min = get<double>(doc, "lambda", "min");
  c.lambda.max = get<double>(doc, "lambda", "max");
  c.lambda.count = get<int>(doc, "lambda", "count");
  c.prior.kind = get<std::string>(doc, "prior", "kind");
  c.prior.amplitude = get<double>(doc, "prior", "amplitude");
  c.prior.corner = get<double>(doc, "prior", "corner");
  c.source.generator = get<std::string>(doc, "source", "generator");
  c.source.seed = get<std::uint64_t>(doc, "source", "seed");
  c.source.shapes_per_source = get<int>(doc, "source", "shapes_per_source");
  c.source.background = get<double>(doc, "source", "background");
  c.source.files = get<std::vector<std::string>>(doc, "source", "files");
  c.output.directory = get<std::string>(doc, "output", "directory");
  c.output.timestamped = get<bool>(doc, "output", "timestamped");
  c.output.psf_cache = get<std::string>(doc, "output", "psf_cache");
  c.sweep.sources = get<std::vector<int>>(doc, "sweep", "sources");
  c.sweep.snr_db = get<std::vector<double>>(doc, "sweep", "snr_db");
  c.sweep.separation_dof = get<std::vector<double>>(doc, "sweep", "separation_dof");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc = json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return parse_config(doc, overrides);
}

void ExperimentConfig::validate() const {
  try {
    sieve.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("sieve: ") + e.what());
  }
  if (spectrum.wavelengths.empty()) {
    if (spectrum.sources < 1 || spectrum.sources > kMaxSources)
      throw ConfigError("spectrum.sources must be in 1.." + std::to_string(kMaxSources));
    if (!(spectrum.first_wavelength > 0.0)) throw ConfigError("spectrum.first_wavelength must be positive");
    if (spectrum.sources > 1 && !(spectrum.separation_dof > 0.0))
      throw ConfigError("spectrum.separation_dof must be positive");
  } else if (spectrum.wavelengths.size() > static_cast<std::size_t>(kMaxSources)) {
    throw ConfigError("at most " + std::to_string(kMaxSources) + " wavelengths are supported");
  }
  std::vector<double> w;
  try {
    w = wavelengths();
    SpectralSetup check(w);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("spectrum: ") + e.what());
  }

  if (candidates.count < 1) throw ConfigError("candidates.count must be at least 1");
  if (candidates.copies < 1) throw ConfigError("candidates.copies must be at least 1");
  if (!(candidates.margin_dof >= 0.0)) throw ConfigError("candidates.margin_dof must be nonnegative");
  if (candidates.min_distance.has_value() != candidates.max_distance.has_value())
    throw ConfigError("set both candidates.min_distance and candidates.max_distance, or neither");
  const CandidateSet grid = candidate_set();
  for (double l : w) {
    const double f = focal_length(sieve, l);
    if (f < grid.plane_distances.front() || f > grid.plane_distances.back())
      throw ConfigError("candidate grid does not span the focal length " + std::to_string(f) +
                        " m of wavelength " + std::to_string(l) + " m");
  }
  if (target_m < static_cast<int>(w.size()) || target_m > grid.total())
    throw ConfigError("target_m must be between the number of sources and the candidate total " +
                      std::to_string(grid.total()));

  if (imaging.side < 2) throw ConfigError("imaging.side must be at least 2");
  if (imaging.kernel_size < 1 || imaging.kernel_size % 2 == 0)
    throw ConfigError("imaging.kernel_size must be odd");
  if (imaging.kernel_size > imaging.side) throw ConfigError("imaging.kernel_size exceeds imaging.side");
  if (imaging.kernel_size > sieve.pupil_samples)
    throw ConfigError("imaging.kernel_size exceeds sieve.pupil_samples");
  if (imaging.pixel_pitch && !(*imaging.pixel_pitch > 0.0))
    throw ConfigError("imaging.pixel_pitch must be positive");

  if (noise.snr_db && !std::isfinite(*noise.snr_db)) throw ConfigError("noise.snr_db must be finite");
  if (lambda.fixed) {
    if (!(*lambda.fixed > 0.0)) throw ConfigError("lambda.fixed must be positive");
  } else {
    if (!(lambda.min > 0.0) || !(lambda.max >= lambda.min))
      throw ConfigError("lambda grid needs 0 < min <= max");
    if (lambda.count < 1) throw ConfigError("lambda.count must be at least 1");
  }
  if (prior.kind != "white" && prior.kind != "power")
    throw ConfigError("prior.kind must be 'white' or 'power'");
  if (!(prior.amplitude > 0.0) || !(prior.corner > 0.0))
    throw ConfigError("prior.amplitude and prior.corner must be positive");

  if (source.files.empty()) {
    if (source.generator != "shapes") throw ConfigError("unknown source generator '" + source.generator + "'");
    if (source.shapes_per_source < 1) throw ConfigError("source.shapes_per_source must be at least 1");
    if (!(source.background >= 0.0) || source.background >= 0.5)
      throw ConfigError("source.background must be in [0, 0.5)");
  } else {
    if (source.files.size() != w.size())
      throw ConfigError("source.files needs one file per wavelength");
    for (const auto& f : source.files)
      if (!std::filesystem::exists(f)) throw ConfigError("source file '" + f + "' does not exist");
  }
  if (output.directory.empty()) throw ConfigError("output.directory must not be empty");

  for (int s : sweep.sources)
    if (s < 1 || s > kMaxSources) throw ConfigError("sweep.sources entries must be in 1..8");
  for (double s : sweep.separation_dof)
    if (!(s > 0.0)) throw ConfigError("sweep.separation_dof entries must be positive");
  for (double s : sweep.snr_db)
    if (!std::isfinite(s)) throw ConfigError("sweep.snr_db entries must be finite");
}

std::vector<double> ExperimentConfig::wavelengths() const {
  if (!spectrum.wavelengths.empty()) return spectrum.wavelengths;
  return wavelengths_with_focal_separation(sieve, spectrum.first_wavelength, spectrum.sources,
                                           spectrum.separation_dof);
}

double ExperimentConfig::pixel_pitch() const {
  return imaging.pixel_pitch ? *imaging.pixel_pitch : default_pixel_pitch(sieve);
}

CandidateSet ExperimentConfig::candidate_set() const {
  double lo = 0.0, hi = 0.0;
  if (candidates.min_distance) {
    lo = *candidates.min_distance;
    hi = *candidates.max_distance;
  } else {
    const auto w = wavelengths();
    // Longest wavelength focuses closest; margins use the largest DOF.
    const double dof = depth_of_focus(sieve, w.front());
    lo = focal_length(sieve, w.back()) - candidates.margin_dof * dof;
    hi = focal_length(sieve, w.front()) + candidates.margin_dof * dof;
  }
  if (!(lo > 0.0)) throw ConfigError("candidate grid reaches non-positive distances");
  if (candidates.count > 1 && !(hi > lo)) throw ConfigError("candidate grid range is empty");
  if (candidates.count == 1 && hi != lo) hi = lo;
  return CandidateSet::uniform(lo, hi, candidates.count, candidates.copies);
}

std::vector<double> ExperimentConfig::lambda_grid() const {
  if (lambda.fixed) return {*lambda.fixed};
  return log_grid(lambda.min, lambda.max, lambda.count);
}

}  // namespace csbs::harness
