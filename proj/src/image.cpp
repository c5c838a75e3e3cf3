#include "rcpose/image.hpp"

#include <algorithm>
#include <cmath>

#include "rcpose/errors.hpp"

namespace rcpose {

ImageF MaskedCopy(const ImageF& image, const Mask& mask) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw InvalidArgument("MaskedCopy: image and mask dimensions differ");
  }
  ImageF out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (mask.at(x, y) != 0) continue;
      for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = 0.0f;
    }
  }
  return out;
}

float SampleBilinear(const ImageF& image, double u, double v, int channel) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const int x0 = static_cast<int>(fu);
  const int y0 = static_cast<int>(fv);
  const double ax = u - fu;
  const double ay = v - fv;
  auto tap = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= image.width() || y >= image.height()) return 0.0;
    return image.at(x, y, channel);
  };
  const double top = (1.0 - ax) * tap(x0, y0) + ax * tap(x0 + 1, y0);
  const double bottom = (1.0 - ax) * tap(x0, y0 + 1) + ax * tap(x0 + 1, y0 + 1);
  return static_cast<float>((1.0 - ay) * top + ay * bottom);
}

std::size_t CountOn(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(
      mask.pixels().begin(), mask.pixels().end(),
      [](std::uint8_t m) { return m != 0; }));
}

PixelBox BoundingBox(const Mask& mask) {
  PixelBox box{mask.width(), mask.height(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) == 0) continue;
      box.x_min = std::min(box.x_min, x);
      box.y_min = std::min(box.y_min, y);
      box.x_max = std::max(box.x_max, x);
      box.y_max = std::max(box.y_max, y);
    }
  }
  return box;
}

}  // namespace rcpose
