#include "jcsdrm/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "json.hpp"

namespace jcsdrm {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw InputError(path.string() + ": cannot open");
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<png_byte> bytes;  // rows, 16-bit samples in host order
};

// libpng reports errors by longjmp, so everything touched after setjmp lives behind a
// pointer taken before it.
struct ReadState {
  std::string err;
  png_structp png = nullptr;
  png_infop info = nullptr;
  Decoded out;
  std::vector<png_bytep> rows;
  ~ReadState() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct WriteState {
  std::string err;
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::vector<png_bytep> rows;
  ~WriteState() { png_destroy_write_struct(&png, &info); }
};

// Keeps the bit depth of gray inputs; everything else becomes 8-bit RGB.
Decoded decode(const std::filesystem::path& path, bool want_rgb) {
  File f = open(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8)) throw InputError(path.string() + ": not a PNG file");
  const auto st = std::make_unique<ReadState>();
  st->png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st->err, png_fail, png_warn);
  if (!st->png) throw std::bad_alloc();
  st->info = png_create_info_struct(st->png);
  if (!st->info) throw std::bad_alloc();
  if (setjmp(png_jmpbuf(st->png))) throw InputError(path.string() + ": " + st->err);
  png_structp png = st->png;
  png_infop info = st->info;
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int type = png_get_color_type(png, info);
  if (type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if ((type & PNG_COLOR_MASK_COLOR) == 0 && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  if (want_rgb) {
    png_set_strip_16(png);
    if ((type & PNG_COLOR_MASK_COLOR) == 0) png_set_gray_to_rgb(png);
  } else if (type & PNG_COLOR_MASK_COLOR) {
    st->err = "expected a grayscale PNG";
    png_longjmp(png, 1);
  }
  if (std::endian::native == std::endian::little && png_get_bit_depth(png, info) == 16) png_set_swap(png);
  png_read_update_info(png, info);
  st->out.width = static_cast<int>(png_get_image_width(png, info));
  st->out.height = static_cast<int>(png_get_image_height(png, info));
  st->out.channels = png_get_channels(png, info);
  st->out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  st->out.bytes.resize(stride * static_cast<std::size_t>(st->out.height));
  for (int y = 0; y < st->out.height; ++y) st->rows.push_back(st->out.bytes.data() + stride * y);
  png_read_image(png, st->rows.data());
  png_read_end(png, nullptr);
  return std::move(st->out);
}

void encode(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
            std::vector<png_byte>& bytes) {
  File f = open(path, "wb");
  const auto st = std::make_unique<WriteState>();
  st->png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st->err, png_fail, png_warn);
  if (!st->png) throw std::bad_alloc();
  st->info = png_create_info_struct(st->png);
  if (!st->info) throw std::bad_alloc();
  if (setjmp(png_jmpbuf(st->png))) throw InputError(path.string() + ": " + st->err);
  png_structp png = st->png;
  png_infop info = st->info;
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (std::endian::native == std::endian::little && bit_depth == 16) png_set_swap(png);
  const std::size_t stride = png_get_rowbytes(png, info);
  for (int y = 0; y < height; ++y) st->rows.push_back(bytes.data() + stride * y);
  png_write_image(png, st->rows.data());
  png_write_end(png, nullptr);
}

std::uint16_t sample16(const Decoded& d, std::size_t i) {
  if (d.bit_depth == 8) return d.bytes[i];
  std::uint16_t v;
  std::memcpy(&v, d.bytes.data() + 2 * i, 2);
  return v;
}

void write_gray16(const std::filesystem::path& path, int w, int h, const std::vector<std::uint16_t>& values) {
  std::vector<png_byte> bytes(values.size() * 2);
  std::memcpy(bytes.data(), values.data(), bytes.size());
  encode(path, w, h, PNG_COLOR_TYPE_GRAY, 16, bytes);
}

}  // namespace

ColorImage read_color_png(const std::filesystem::path& path) {
  const Decoded d = decode(path, true);
  ColorImage img(d.width, d.height);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = {d.bytes[3 * i], d.bytes[3 * i + 1], d.bytes[3 * i + 2]};
  return img;
}

void write_color_png(const std::filesystem::path& path, const ColorImage& image) {
  std::vector<png_byte> bytes;
  bytes.reserve(image.size() * 3);
  for (const auto& c : image.data()) bytes.insert(bytes.end(), c.begin(), c.end());
  encode(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, 8, bytes);
}

DepthImage read_depth_png(const std::filesystem::path& path, double depth_scale) {
  if (!(depth_scale > 0.0)) throw InputError(path.string() + ": depth scale must be positive");
  const Decoded d = decode(path, false);
  DepthImage depth(d.width, d.height);
  for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = sample16(d, i) * depth_scale;
  return depth;
}

void write_depth_png(const std::filesystem::path& path, const DepthImage& depth, double depth_scale) {
  std::vector<std::uint16_t> raw(depth.size(), 0);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double v = depth[i] / depth_scale;
    if (std::isfinite(v) && v > 0.0) raw[i] = static_cast<std::uint16_t>(std::min(std::round(v), 65535.0));
  }
  write_gray16(path, depth.width(), depth.height(), raw);
}

LabelMap read_label_png(const std::filesystem::path& path) {
  const Decoded d = decode(path, false);
  LabelMap labels(d.width, d.height);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = sample16(d, i);
  return labels;
}

void write_label_png(const std::filesystem::path& path, const LabelMap& labels) {
  std::vector<std::uint16_t> raw(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > 65535) throw std::invalid_argument(path.string() + ": label out of 16-bit range");
    raw[i] = static_cast<std::uint16_t>(labels[i]);
  }
  write_gray16(path, labels.width(), labels.height(), raw);
}

Intrinsics read_intrinsics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open");
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    Intrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.depth_scale = j.value("depth_scale", k.depth_scale);
    if (!(k.fx > 0.0 && k.fy > 0.0 && k.depth_scale > 0.0))
      throw InputError(path.string() + ": focal lengths and depth_scale must be positive");
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_intrinsics(const std::filesystem::path& path, const Intrinsics& k) {
  std::ofstream out(path);
  if (!out) throw InputError(path.string() + ": cannot write");
  out << nlohmann::json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"depth_scale", k.depth_scale}}.dump(2)
      << '\n';
}

}  // namespace jcsdrm
