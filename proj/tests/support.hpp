#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "rcpose/camera.hpp"
#include "rcpose/evaluation.hpp"
#include "rcpose/mesh.hpp"
#include "rcpose/rotations.hpp"

namespace rcpose::testing {

inline CameraIntrinsics MakeCamera(int w, int h, double f) {
  CameraIntrinsics k;
  k.fx = k.fy = f;
  k.cx = 0.5 * (w - 1);
  k.cy = 0.5 * (h - 1);
  k.width = w;
  k.height = h;
  return k;
}

// Depth image of a plane z = z0 + tx * X + ty * Y seen by k, with every
// pixel valid.
inline DepthMap PlaneDepth(const CameraIntrinsics& k, double z0, double tx = 0.0,
                           double ty = 0.0) {
  DepthMap d(k.width, k.height, 1);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const double rx = (u - k.cx) / k.fx;
      const double ry = (v - k.cy) / k.fy;
      d.at(u, v) = static_cast<float>(z0 / (1.0 - tx * rx - ty * ry));
    }
  }
  return d;
}

inline ImageF GradientRgb(int w, int h) {
  ImageF rgb(w, h, 3);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      rgb.at(u, v, 0) = static_cast<float>(u) / static_cast<float>(w);
      rgb.at(u, v, 1) = static_cast<float>(v) / static_cast<float>(h);
      rgb.at(u, v, 2) = ((u / 4 + v / 4) % 2 == 0) ? 0.8f : 0.2f;
    }
  }
  return rgb;
}

inline TexturedMesh PlaneMesh(const CameraIntrinsics& k, double z0) {
  const DepthMap d = PlaneDepth(k, z0);
  const Mask all(k.width, k.height, 1, 1);
  return BuildMesh(Backproject(d, k, all), GradientRgb(k.width, k.height), nullptr);
}

// Closed cube with outward normals, one colour per face.
inline TexturedMesh CubeMesh(const Eigen::Vector3d& center, double half) {
  TexturedMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back(center + half * Eigen::Vector3d((i & 1) ? 1 : -1, (i & 2) ? 1 : -1,
                                                         (i & 4) ? 1 : -1));
  }
  const std::array<std::array<int, 4>, 6> quads = {{
      {0, 2, 3, 1},  // z-
      {4, 5, 7, 6},  // z+
      {0, 1, 5, 4},  // y-
      {2, 6, 7, 3},  // y+
      {0, 4, 6, 2},  // x-
      {1, 3, 7, 5},  // x+
  }};
  std::vector<std::array<int, 3>> tris;
  for (const auto& q : quads) {
    tris.push_back({q[0], q[1], q[2]});
    tris.push_back({q[0], q[2], q[3]});
  }
  // Unshared vertices so every face can carry its own colour.
  TexturedMesh out;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    std::array<int, 3> tri{};
    for (int j = 0; j < 3; ++j) {
      tri[j] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(m.vertices[tris[t][j]]);
      const float c = static_cast<float>(t + 1) / 13.0f;
      out.rgb.emplace_back(c, 1.0f - c, 0.5f);
      out.semantic.emplace_back(0.0f, 0.0f, 0.0f);
    }
    out.triangles.push_back(tri);
  }
  out.normals = FaceNormals(out);
  out.centroid = center;
  return out;
}

inline std::vector<Rotation> RandomRotations(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<Rotation> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.UniformRotation());
  return out;
}

inline double AngleDeg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / 3.14159265358979323846;
}

}  // namespace rcpose::testing
