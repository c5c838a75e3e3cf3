#pragma once

#include "rcpose/camera.hpp"
#include "rcpose/image.hpp"
#include "rcpose/renderer.hpp"

namespace rcpose {

// Square window in continuous source coordinates (pixel i spans
// [i - 0.5, i + 0.5]).
struct CropWindow {
  double x0 = 0.0;
  double y0 = 0.0;
  double side = 0.0;
};

// Square around the box [x_min, x_max] x [y_min, y_max], centred on it, with
// side max(width, height) * (1 + 2 * margin).
CropWindow SquareWindow(double x_min, double y_min, double x_max, double y_max,
                        double margin);

// SquareWindow of the mask's pixel bounding box. Throws DegenerateError on an
// empty mask.
CropWindow MaskWindow(const Mask& mask, double margin);

// Intrinsics that project straight into a resolution x resolution crop of
// `window`: fx' = fx * r / side, cx' = (cx - x0) * r / side - 0.5.
CameraIntrinsics CropIntrinsics(const CameraIntrinsics& k, const CropWindow& window,
                                int resolution);

// Maps a source pixel coordinate into crop pixel coordinates.
Eigen::Vector2d ToCrop(const CropWindow& window, int resolution, double u, double v);

ImageF ResampleCrop(const ImageF& image, const CropWindow& window, int resolution);
Mask ResampleCropMask(const Mask& mask, const CropWindow& window, int resolution);

struct NormalizedCrop {
  ImageF image;
  Mask mask;
  RenderCamera camera;
  CropWindow window;
};

// Object-centred square crop (mask bounding box + margin) resampled to
// resolution x resolution, with the matching render camera.
NormalizedCrop NormalizeCrop(const ImageF& image, const Mask& mask,
                             const CameraIntrinsics& k, int resolution,
                             double margin = 0.1);

}  // namespace rcpose
