#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "rcpose/camera.hpp"
#include "rcpose/image.hpp"
#include "rcpose/mesh.hpp"
#include "rcpose/rotations.hpp"

namespace rcpose {

// Target camera of a render; its intrinsics carry the output resolution.
struct RenderCamera {
  CameraIntrinsics intrinsics;
  int width() const { return intrinsics.width; }
  int height() const { return intrinsics.height; }
};

// rgb/semantic are zero and depth is +inf outside coverage.
struct RenderOutput {
  ImageF rgb;
  ImageF semantic;
  Mask coverage;
  ImageF depth;

  void Reset(int width, int height);
  std::size_t covered_pixels() const { return CountOn(coverage); }
};

// Mesh vertices rotated about the mesh centroid, v' = R (v - c) + c, and the
// faces that survive back-surface culling (rotated normal . (0,0,1) < 0).
struct PosedGeometry {
  std::vector<Eigen::Vector3d> points;
  std::vector<std::uint8_t> face_visible;
  std::size_t visible_faces = 0;
};

PosedGeometry PoseMesh(const TexturedMesh& mesh, const Rotation& pose, bool cull);

// Continuous image-plane bounds of the projected vertices of visible faces.
struct ImageBounds {
  double x_min, y_min, x_max, y_max;
};
std::optional<ImageBounds> ProjectedBounds(const TexturedMesh& mesh,
                                           const PosedGeometry& posed,
                                           const CameraIntrinsics& k);

// Z-buffered rasterization of the visible faces into `out` with
// perspective-correct attribute interpolation and a top-left fill rule.
// Faces with a vertex at or behind the camera plane are skipped.
void Rasterize(const TexturedMesh& mesh, const PosedGeometry& posed,
               const RenderCamera& camera, RenderOutput& out);

RenderOutput Render(const TexturedMesh& mesh, const Rotation& pose,
                    const RenderCamera& camera, bool cull);

// Elementwise Render over `poses`, fanned out over `workers` threads
// (0 = hardware concurrency). Output order matches input order.
std::vector<RenderOutput> RenderBatch(const TexturedMesh& mesh,
                                      const std::vector<Rotation>& poses,
                                      const RenderCamera& camera, bool cull,
                                      int workers = 0);

// Runs fn(i) for i in [0, count) on up to `workers` threads. Exceptions are
// rethrown on the caller, lowest index first. Each index runs exactly once.
template <typename Fn>
void ParallelFor(std::size_t count, int workers, Fn&& fn);

}  // namespace rcpose

#include "rcpose/parallel.hpp"
