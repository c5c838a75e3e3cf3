#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rcpose {

// Dense interleaved image, row-major (y, x, channel).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }

  T& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const noexcept {
    return data_[index(x, y, c)];
  }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using ImageF = Image<float>;
// Single-channel binary image; any non-zero value is "on".
using Mask = Image<std::uint8_t>;

// Copy of `image` with every pixel outside `mask` set to zero.
ImageF MaskedCopy(const ImageF& image, const Mask& mask);

// Bilinear sample with pixel centres at integer coordinates; taps outside
// the image read as zero.
float SampleBilinear(const ImageF& image, double u, double v, int channel);

std::size_t CountOn(const Mask& mask);

struct PixelBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = -1;  // inclusive
  int y_max = -1;
  bool empty() const noexcept { return x_max < x_min || y_max < y_min; }
};

PixelBox BoundingBox(const Mask& mask);

}  // namespace rcpose
