#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "rcpose/image.hpp"

namespace rcpose {

// Pinhole intrinsics; pixel centres sit at integer coordinates.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  // Throws InvalidArgument when the invariants do not hold.
  void Validate() const;
  // Focal lengths and size only. Crop cameras may legitimately have their
  // principal point outside the crop.
  void ValidateProjection() const;
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

// Metric depth in metres, one channel, 0 = invalid.
using DepthMap = ImageF;

// Back-projected points in row-major pixel order, one slot per pixel.
struct PointCloud {
  int width = 0;
  int height = 0;
  std::vector<Eigen::Vector3d> points;
  std::vector<std::uint8_t> valid;

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * width + u;
  }
  std::size_t valid_count() const;
};

PointCloud Backproject(const DepthMap& depth, const CameraIntrinsics& k,
                       const Mask& mask);

// (u, v, z): pixel coordinates plus depth. Throws InvalidArgument for z <= 0.
Eigen::Vector3d Project(const Eigen::Vector3d& point, const CameraIntrinsics& k);

}  // namespace rcpose
