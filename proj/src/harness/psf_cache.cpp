#include "csbs/harness/psf_cache.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "csbs/harness/image_io.hpp"

namespace csbs::harness {

namespace fs = std::filesystem;

constexpr const char* kEntryMagic = "CSBSPSFC1";

std::string cache_key(const PsfRequest& r) {
  std::ostringstream text;
  text << "csbs-psf-v1"
       << "|D=" << format_double(r.sieve.diameter) << "|dr=" << format_double(r.sieve.smallest_zone_width)
       << "|pupil=" << r.sieve.pupil_samples << "|N=" << r.side << "|P=" << r.kernel_size
       << "|pitch=" << format_double(r.pixel_pitch) << "|w=";
  for (double w : r.wavelengths) text << format_double(w) << ',';
  text << "|d=";
  for (double d : r.distances) text << format_double(d) << ',';
  const std::string s = text.str();

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(s.data(), s.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("cache_key: SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

PsfTable synthesize_psfs(const PsfRequest& r) {
  const int planes = static_cast<int>(r.distances.size());
  const int sources = static_cast<int>(r.wavelengths.size());
  PsfTable table(static_cast<std::size_t>(planes), std::vector<Psf>(static_cast<std::size_t>(sources)));
  const int jobs = planes * sources;
  std::exception_ptr error;
  int error_at = jobs;
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < jobs; ++j) {
    const int c = j / sources, s = j % sources;
    try {
      table[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)] =
          generate_psf(r.sieve, r.wavelengths[static_cast<std::size_t>(s)],
                       r.distances[static_cast<std::size_t>(c)], r.kernel_size, r.pixel_pitch);
    } catch (...) {
#pragma omp critical(psf_synthesis_error)
      if (j < error_at) {
        error_at = j;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return table;
}

TransferCube load_psf_cache(const std::string& path, const PsfRequest& r) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open cache entry '" + path + "'");
  std::string magic, key;
  in >> magic >> key;
  if (magic != kEntryMagic || in.get() != '\n')
    throw std::runtime_error("cache entry '" + path + "' has no key header");
  if (key != cache_key(r)) throw std::runtime_error("cache entry '" + path + "' has a mismatched key");
  TransferCube t = read_transfer(in);
  if (t.planes() != static_cast<int>(r.distances.size()) ||
      t.sources() != static_cast<int>(r.wavelengths.size()) || t.side() != r.side ||
      t.plane_distances() != r.distances)
    throw std::runtime_error("cache entry '" + path + "' does not match the requested parameters");
  return t;
}

TransferBuild build_transfer_cached(const PsfRequest& r, const std::string& cache_dir,
                                    std::ostream& diagnostics) {
  const auto start = std::chrono::steady_clock::now();
  TransferBuild out;
  fs::path entry;
  if (!cache_dir.empty()) {
    entry = fs::path(cache_dir) / (cache_key(r) + ".trf");
    if (fs::exists(entry)) {
      try {
        out.transfer = load_psf_cache(entry.string(), r);
        out.cache_hit = true;
      } catch (const std::exception& e) {
        diagnostics << "warning: discarding PSF cache entry: " << e.what() << "; recomputing\n";
      }
    }
  }
  if (!out.cache_hit) {
    const PsfTable psfs = synthesize_psfs(r);
    int truncated = 0;
    for (const auto& row : psfs)
      for (const auto& p : row) truncated += p.truncated ? 1 : 0;
    out.truncated_psfs = truncated;
    out.transfer = build_transfer(psfs, r.side);
    if (!entry.empty()) {
      fs::create_directories(entry.parent_path());
      // Write under a temporary name so a concurrent reader never sees a
      // partial entry.
      const fs::path tmp = entry.string() + ".tmp" + std::to_string(std::hash<std::string>{}(entry.string()) ^
                                                                   reinterpret_cast<std::uintptr_t>(&out));
      {
        std::ofstream f(tmp, std::ios::binary);
        f << kEntryMagic << ' ' << cache_key(r) << '\n';
        write_transfer(out.transfer, f);
        if (!f) throw std::runtime_error("failed writing PSF cache entry '" + tmp.string() + "'");
      }
      fs::rename(tmp, entry);
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace csbs::harness
