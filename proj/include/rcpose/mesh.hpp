#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "rcpose/camera.hpp"
#include "rcpose/image.hpp"
#include "rcpose/semantics.hpp"

namespace rcpose {

// Front-surface 2.5D mesh lifted from one depth map, with per-vertex colour
// and semantic attributes. Triangles wind counter-clockwise in image space,
// so unrotated faces have normal . (0,0,1) < 0.
struct TexturedMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Eigen::Vector3f> rgb;
  std::vector<Eigen::Vector3f> semantic;
  std::vector<Eigen::Vector3d> normals;  // one per triangle
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();

  bool empty() const noexcept { return triangles.empty(); }
};

struct MeshOptions {
  // Triangles with a 3D edge longer than
  // max(min_discontinuity, median_factor * median quad edge) are dropped.
  double min_discontinuity = 0.02;
  double median_factor = 6.0;
};

// Two triangles per fully valid 2x2 pixel quad, split along the shorter 3D
// diagonal. `semantic` may be null, in which case semantic attributes are 0.
// Throws DegenerateError when nothing survives.
TexturedMesh BuildMesh(const PointCloud& cloud, const ImageF& rgb,
                       const SemanticMap* semantic,
                       const MeshOptions& options = {});

// Unit normal of every triangle: normalize((v1 - v0) x (v2 - v0)).
std::vector<Eigen::Vector3d> FaceNormals(const TexturedMesh& mesh);

// ASCII PLY with positions, 8-bit colours and faces.
void WritePly(const TexturedMesh& mesh, std::ostream& out);

}  // namespace rcpose
