#include "rcpose/camera.hpp"

#include <algorithm>
#include <cmath>

#include "rcpose/errors.hpp"

namespace rcpose {

void CameraIntrinsics::ValidateProjection() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw InvalidArgument("intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("intrinsics: image size must be positive");
  }
}

void CameraIntrinsics::Validate() const {
  ValidateProjection();
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw InvalidArgument("intrinsics: principal point outside the image");
  }
}

std::size_t PointCloud::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(valid.begin(), valid.end(), [](std::uint8_t f) { return f != 0; }));
}

PointCloud Backproject(const DepthMap& depth, const CameraIntrinsics& k,
                       const Mask& mask) {
  if (depth.width() != k.width || depth.height() != k.height ||
      mask.width() != k.width || mask.height() != k.height ||
      depth.channels() != 1) {
    throw InvalidArgument("Backproject: depth/mask dimensions do not match intrinsics");
  }
  PointCloud cloud;
  cloud.width = k.width;
  cloud.height = k.height;
  cloud.points.assign(depth.pixel_count(), Eigen::Vector3d::Zero());
  cloud.valid.assign(depth.pixel_count(), 0);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const double z = depth.at(u, v);
      if (!(z > 0.0) || !std::isfinite(z) || mask.at(u, v) == 0) continue;
      const std::size_t i = cloud.index(u, v);
      cloud.points[i] = {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
      cloud.valid[i] = 1;
    }
  }
  return cloud;
}

Eigen::Vector3d Project(const Eigen::Vector3d& point, const CameraIntrinsics& k) {
  if (!(point.z() > 0.0)) throw InvalidArgument("Project: point is behind the camera");
  return {k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy,
          point.z()};
}

}  // namespace rcpose
