#pragma once

// Content-addressed cache of transfer cubes. The key is the SHA-256 of every
// parameter that feeds PSF synthesis; the file is a `CSBSPSFC1 <key>` line
// followed by the transfer container written by write_transfer, named `<key>.trf` inside the cache directory.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csbs/optics.hpp"
#include "csbs/spectral.hpp"

namespace csbs::harness {

struct PsfRequest {
  SieveParams sieve;
  std::vector<double> wavelengths;
  std::vector<double> distances;
  int side = 0;
  int kernel_size = 0;
  double pixel_pitch = 0.0;
};

std::string cache_key(const PsfRequest& request);

// All (plane, wavelength) PSFs, in parallel over the pairs.
PsfTable synthesize_psfs(const PsfRequest& request);

struct TransferBuild {
  TransferCube transfer;
  bool cache_hit = false;
  std::optional<int> truncated_psfs;  // unknown on a cache hit
  double seconds = 0.0;
};

// Loads the cube from `cache_dir` when a valid entry exists; otherwise
// synthesizes it and, when `cache_dir` is non-empty, stores it. A corrupt or
// mismatching entry is reported on `diagnostics` and rebuilt.
TransferBuild build_transfer_cached(const PsfRequest& request, const std::string& cache_dir,
                                    std::ostream& diagnostics);

// Throws when the file is unreadable or does not match `request`.
TransferCube load_psf_cache(const std::string& path, const PsfRequest& request);

}  // namespace csbs::harness
