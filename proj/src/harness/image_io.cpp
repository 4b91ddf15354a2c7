#include "csbs/harness/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>

namespace csbs::harness {

namespace {

constexpr char kRawMagic[8] = {'C', 'S', 'B', 'S', 'R', 'A', 'W', '1'};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::string& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return f;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

void write_png(const std::string& path, const Image& image) {
  if (image.size() == 0) throw std::invalid_argument("write_png: empty image");
  const auto [lo_it, hi_it] = std::minmax_element(image.pixels.begin(), image.pixels.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;

  File f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("write_png: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png: libpng failed writing '" + path + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols), static_cast<png_uint_32>(image.rows), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(image.cols));
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.cols; ++c) {
      const double t = span > 0.0 ? (image(r, c) - lo) / span : 0.0;
      row[static_cast<std::size_t>(c)] = static_cast<png_byte>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_raw(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "'");
  out.write(kRawMagic, sizeof kRawMagic);
  const std::int32_t dims[2] = {image.rows, image.cols};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size() * sizeof(double)));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Image read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  char magic[8];
  std::int32_t dims[2];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kRawMagic, sizeof magic) != 0)
    throw std::runtime_error("'" + path + "' is not a raw image file");
  if (!in.read(reinterpret_cast<char*>(dims), sizeof dims) || dims[0] < 1 || dims[1] < 1 ||
      dims[0] > 1 << 15 || dims[1] > 1 << 15)
    throw std::runtime_error("'" + path + "' has an invalid header");
  Image im(dims[0], dims[1]);
  if (!in.read(reinterpret_cast<char*>(im.pixels.data()),
               static_cast<std::streamsize>(im.pixels.size() * sizeof(double))))
    throw std::runtime_error("'" + path + "' is truncated");
  return im;
}

Image read_png(const std::string& path) {
  File f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("read_png: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("'" + path + "' is not a readable PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_alpha(png);
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);
  png_read_update_info(png, info);
  const int rows = static_cast<int>(png_get_image_height(png, info));
  const int cols = static_cast<int>(png_get_image_width(png, info));
  const int channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> data(rowbytes * static_cast<std::size_t>(rows));
  std::vector<png_bytep> ptrs(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) ptrs[static_cast<std::size_t>(r)] = data.data() + rowbytes * static_cast<std::size_t>(r);
  png_read_image(png, ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);

  const double full = depth == 16 ? 65535.0 : 255.0;
  Image im(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < channels; ++k) {
        const std::size_t i = static_cast<std::size_t>(c * channels + k);
        const png_bytep row = ptrs[static_cast<std::size_t>(r)];
        acc += depth == 16 ? static_cast<double>(reinterpret_cast<const std::uint16_t*>(row)[i])
                           : static_cast<double>(row[i]);
      }
      im(r, c) = acc / (channels * full);
    }
  return im;
}

Image read_image(const std::string& path) {
  if (ends_with(path, ".png") || ends_with(path, ".PNG")) return read_png(path);
  return read_raw(path);
}

void write_image_artifacts(const std::string& stem, const Image& image) {
  write_png(stem + ".png", image);
  write_raw(stem + ".raw", image);
  const auto [lo, hi] = std::minmax_element(image.pixels.begin(), image.pixels.end());
  const nlohmann::json sidecar{{"rows", image.rows},
                               {"cols", image.cols},
                               {"min", *lo},
                               {"max", *hi},
                               {"mapping", "byte = round(255 * (value - min) / (max - min))"},
                               {"raw", stem.substr(stem.find_last_of('/') + 1) + ".raw"}};
  std::ofstream out(stem + ".png.json");
  out << sidecar.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + stem + ".png.json'");
}

}  // namespace csbs::harness
