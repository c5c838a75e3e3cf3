#include "rcpose/crop.hpp"

#include <algorithm>
#include <cmath>

#include "rcpose/errors.hpp"

namespace rcpose {

CropWindow SquareWindow(double x_min, double y_min, double x_max, double y_max,
                        double margin) {
  const double side = std::max(x_max - x_min, y_max - y_min) * (1.0 + 2.0 * margin);
  if (!(side > 0.0)) throw DegenerateError("crop window has zero extent");
  const double cx = 0.5 * (x_min + x_max);
  const double cy = 0.5 * (y_min + y_max);
  return {cx - 0.5 * side, cy - 0.5 * side, side};
}

CropWindow MaskWindow(const Mask& mask, double margin) {
  const PixelBox box = BoundingBox(mask);
  if (box.empty()) throw DegenerateError("empty mask: nothing to crop");
  return SquareWindow(box.x_min - 0.5, box.y_min - 0.5, box.x_max + 0.5,
                      box.y_max + 0.5, margin);
}

CameraIntrinsics CropIntrinsics(const CameraIntrinsics& k, const CropWindow& window,
                                int resolution) {
  const double scale = resolution / window.side;
  CameraIntrinsics out;
  out.fx = k.fx * scale;
  out.fy = k.fy * scale;
  out.cx = (k.cx - window.x0) * scale - 0.5;
  out.cy = (k.cy - window.y0) * scale - 0.5;
  out.width = resolution;
  out.height = resolution;
  return out;
}

Eigen::Vector2d ToCrop(const CropWindow& window, int resolution, double u, double v) {
  const double scale = resolution / window.side;
  return {(u - window.x0) * scale - 0.5, (v - window.y0) * scale - 0.5};
}

ImageF ResampleCrop(const ImageF& image, const CropWindow& window, int resolution) {
  ImageF out(resolution, resolution, image.channels());
  const double step = window.side / resolution;
  for (int y = 0; y < resolution; ++y) {
    const double v = window.y0 + (y + 0.5) * step;
    for (int x = 0; x < resolution; ++x) {
      const double u = window.x0 + (x + 0.5) * step;
      for (int c = 0; c < image.channels(); ++c) {
        out.at(x, y, c) = SampleBilinear(image, u, v, c);
      }
    }
  }
  return out;
}

Mask ResampleCropMask(const Mask& mask, const CropWindow& window, int resolution) {
  Mask out(resolution, resolution, 1);
  const double step = window.side / resolution;
  for (int y = 0; y < resolution; ++y) {
    const auto v = static_cast<int>(std::floor(window.y0 + (y + 0.5) * step + 0.5));
    if (v < 0 || v >= mask.height()) continue;
    for (int x = 0; x < resolution; ++x) {
      const auto u = static_cast<int>(std::floor(window.x0 + (x + 0.5) * step + 0.5));
      if (u < 0 || u >= mask.width()) continue;
      out.at(x, y) = mask.at(u, v) != 0 ? 1 : 0;
    }
  }
  return out;
}

NormalizedCrop NormalizeCrop(const ImageF& image, const Mask& mask,
                             const CameraIntrinsics& k, int resolution, double margin) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw InvalidArgument("NormalizeCrop: image and mask sizes differ");
  }
  if (resolution < 1) throw InvalidArgument("NormalizeCrop: resolution must be positive");
  NormalizedCrop crop;
  crop.window = MaskWindow(mask, margin);
  crop.image = ResampleCrop(image, crop.window, resolution);
  crop.mask = ResampleCropMask(mask, crop.window, resolution);
  crop.camera.intrinsics = CropIntrinsics(k, crop.window, resolution);
  return crop;
}

}  // namespace rcpose
