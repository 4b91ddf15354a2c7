// TransferCube container, little-endian:
//   char[8]  magic "CSBSTRF\0"
//   u32      version (2)
//   i32      planes, sources, side
//   f64      plane_distances[planes]
//   f64      values[planes * sources * side * side * 2]   (re, im interleaved)
//   u64      checksum of everything after the magic up to here: FNV-1a
//            over 8-byte words of each field, trailing bytes one at a time

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "csbs/spectral.hpp"

namespace csbs {

namespace {

constexpr std::array<char, 8> kMagic{'C', 'S', 'B', 'S', 'T', 'R', 'F', '\0'};
constexpr std::uint32_t kVersion = 2;

class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
      std::uint64_t word;
      std::memcpy(&word, p + i, 8);
      hash_ ^= word;
      hash_ *= 0x100000001b3ULL;
    }
    for (; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void put(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    hash_.update(data, n);
  }
  template <typename T>
  void put(const T& v) { put(&v, sizeof(T)); }
  std::uint64_t checksum() const { return hash_.value(); }

 private:
  std::ostream& out_;
  Fnv1a hash_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  void get(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw std::runtime_error("transfer container truncated");
    hash_.update(data, n);
  }
  template <typename T>
  T get() {
    T v;
    get(&v, sizeof(T));
    return v;
  }
  std::uint64_t checksum() const { return hash_.value(); }

 private:
  std::istream& in_;
  Fnv1a hash_;
};

}  // namespace

void write_transfer(const TransferCube& transfer, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  Writer w(out);
  w.put(kVersion);
  w.put(static_cast<std::int32_t>(transfer.planes()));
  w.put(static_cast<std::int32_t>(transfer.sources()));
  w.put(static_cast<std::int32_t>(transfer.side()));
  w.put(transfer.plane_distances().data(), transfer.plane_distances().size() * sizeof(double));
  w.put(transfer.values().data(), transfer.values().size() * sizeof(cd));
  const std::uint64_t sum = w.checksum();
  out.write(reinterpret_cast<const char*>(&sum), sizeof(sum));
  if (!out) throw std::runtime_error("failed to write transfer container");
}

TransferCube read_transfer(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != static_cast<std::streamsize>(magic.size()) || magic != kMagic)
    throw std::runtime_error("not a transfer container (bad magic)");
  Reader r(in);
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw std::runtime_error("unsupported transfer container version " + std::to_string(version));
  const auto planes = r.get<std::int32_t>();
  const auto sources = r.get<std::int32_t>();
  const auto side = r.get<std::int32_t>();
  if (planes < 1 || sources < 1 || side < 1 || planes > (1 << 20) || sources > 64 ||
      side > (1 << 14))
    throw std::runtime_error("transfer container has implausible dimensions");
  std::vector<double> distances(static_cast<std::size_t>(planes));
  r.get(distances.data(), distances.size() * sizeof(double));
  std::vector<cd> values(static_cast<std::size_t>(planes) * sources * side * side);
  r.get(values.data(), values.size() * sizeof(cd));
  const std::uint64_t expected = r.checksum();
  std::uint64_t stored = 0;
  in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  if (in.gcount() != sizeof(stored) || stored != expected)
    throw std::runtime_error("transfer container checksum mismatch");
  return TransferCube(planes, sources, side, std::move(distances), std::move(values));
}

}  // namespace csbs
