#include "rcpose/app/png_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "rcpose/errors.hpp"

namespace rcpose::app {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File Open(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw IoError(path.string(), mode[0] == 'r' ? "cannot open image" : "cannot create image");
  }
  return f;
}

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<unsigned char> bytes;  // rows packed; 16-bit samples in host order
};

enum class Want { kRgb8, kGray8, kGray16 };

Decoded Decode(const std::filesystem::path& path, Want want) {
  File file = Open(path, "rb");
  unsigned char signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw IoError(path.string(), "not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string(), "libpng initialisation failed");
  }
  Decoded out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string(), "corrupt PNG");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (want == Want::kGray16 && (color != PNG_COLOR_TYPE_GRAY || depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string(), "depth image must be 16-bit greyscale");
  }
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (want != Want::kGray16) {
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (want == Want::kRgb8 &&
        (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)) {
      png_set_gray_to_rgb(png);
    }
    if (want == Want::kGray8 &&
        (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
         color == PNG_COLOR_TYPE_PALETTE)) {
      png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
  } else {
    png_set_swap(png);  // host little-endian order
  }
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void Encode(const std::filesystem::path& path, int width, int height, int color,
            int bit_depth, const std::vector<unsigned char>& bytes) {
  File file = Open(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string(), "libpng initialisation failed");
  }
  const int channels = color == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t stride = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(bytes.data() + stride * y);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string(), "failed writing PNG");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

unsigned char ToByte(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return static_cast<unsigned char>(std::lround(c * 255.0f));
}

}  // namespace

ImageF LoadRgb(const std::filesystem::path& path) {
  const Decoded d = Decode(path, Want::kRgb8);
  ImageF image(d.width, d.height, 3);
  for (std::size_t i = 0; i < d.bytes.size(); ++i) image.storage()[i] = d.bytes[i] / 255.0f;
  return image;
}

Mask LoadMask(const std::filesystem::path& path) {
  const Decoded d = Decode(path, Want::kGray8);
  Mask mask(d.width, d.height, 1);
  for (std::size_t i = 0; i < d.bytes.size(); ++i) mask.storage()[i] = d.bytes[i] != 0 ? 1 : 0;
  return mask;
}

DepthMap LoadDepth(const std::filesystem::path& path, double depth_scale) {
  if (!(depth_scale > 0.0)) throw InvalidArgument("depth_scale must be positive");
  const Decoded d = Decode(path, Want::kGray16);
  DepthMap depth(d.width, d.height, 1);
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    const auto raw = static_cast<std::uint16_t>(d.bytes[2 * i] | (d.bytes[2 * i + 1] << 8));
    depth.storage()[i] = static_cast<float>(raw * depth_scale / 1000.0);
  }
  return depth;
}

void SaveRgb(const ImageF& image, const std::filesystem::path& path) {
  if (image.channels() != 3) throw InvalidArgument("SaveRgb: expected 3 channels");
  std::vector<unsigned char> bytes(image.storage().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = ToByte(image.storage()[i]);
  Encode(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, 8, bytes);
}

void SaveMask(const Mask& mask, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes(mask.pixel_count());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.storage()[i] != 0 ? 255 : 0;
  Encode(path, mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, 8, bytes);
}

void SaveDepth(const DepthMap& depth, double depth_scale, const std::filesystem::path& path) {
  if (!(depth_scale > 0.0)) throw InvalidArgument("depth_scale must be positive");
  std::vector<unsigned char> bytes(depth.pixel_count() * 2);
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    const double units = std::round(depth.storage()[i] * 1000.0 / depth_scale);
    if (!(units >= 0.0 && units <= 65535.0)) {
      throw InvalidArgument("SaveDepth: depth does not fit in 16 bits at this scale");
    }
    const auto raw = static_cast<std::uint16_t>(units);
    bytes[2 * i] = static_cast<unsigned char>(raw & 0xff);
    bytes[2 * i + 1] = static_cast<unsigned char>(raw >> 8);
  }
  Encode(path, depth.width(), depth.height(), PNG_COLOR_TYPE_GRAY, 16, bytes);
}

}  // namespace rcpose::app
