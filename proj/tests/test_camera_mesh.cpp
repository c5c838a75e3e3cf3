#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <sstream>

#include "rcpose/camera.hpp"
#include "rcpose/errors.hpp"
#include "rcpose/mesh.hpp"
#include "rcpose/semantics.hpp"
#include "support.hpp"

namespace rcpose {
namespace {

using testing::MakeCamera;
using testing::PlaneDepth;

CameraIntrinsics K640() {
  CameraIntrinsics k;
  k.fx = 500;
  k.fy = 500;
  k.cx = 320;
  k.cy = 240;
  k.width = 640;
  k.height = 480;
  return k;
}

TEST(Camera, BackprojectExamples) {
  const CameraIntrinsics k = K640();
  DepthMap d(k.width, k.height, 1);
  Mask m(k.width, k.height, 1);
  d.at(320, 240) = 1.0f;
  m.at(320, 240) = 1;
  d.at(500, 240) = 2.0f;  // not (cx + fx): out of frame, use a second case below
  m.at(500, 240) = 1;
  const PointCloud c = Backproject(d, k, m);
  ASSERT_EQ(c.valid_count(), 2u);
  EXPECT_LT((c.points[c.index(320, 240)] - Eigen::Vector3d(0, 0, 1)).norm(), 1e-12);

  CameraIntrinsics wide = k;
  wide.fx = wide.fy = 100;
  DepthMap d2(k.width, k.height, 1);
  d2.at(420, 240) = 2.0f;
  const PointCloud c2 = Backproject(d2, wide, Mask(k.width, k.height, 1, 1));
  EXPECT_LT((c2.points[c2.index(420, 240)] - Eigen::Vector3d(2, 0, 2)).norm(), 1e-12);
  EXPECT_EQ(c2.valid_count(), 1u);  // zero depth is invalid even inside the mask
}

TEST(Camera, ProjectExamples) {
  const CameraIntrinsics k = K640();
  EXPECT_LT((Project({0, 0, 1}, k) - Eigen::Vector3d(320, 240, 1)).norm(), 1e-12);
  EXPECT_LT((Project({2, 0, 2}, k) - Eigen::Vector3d(820, 240, 2)).norm(), 1e-12);
  EXPECT_THROW(Project({0, 0, 0}, k), InvalidArgument);
  EXPECT_THROW(Project({0, 0, -1}, k), InvalidArgument);
}

TEST(Camera, RoundTripAndScaling) {
  const CameraIntrinsics k = K640();
  SeededRng rng(1);
  DepthMap d(k.width, k.height, 1);
  Mask m(k.width, k.height, 1);
  for (int i = 0; i < 500; ++i) {
    const int u = static_cast<int>(rng.Below(640));
    const int v = static_cast<int>(rng.Below(480));
    d.at(u, v) = static_cast<float>(rng.Uniform(0.2, 3.0));
    m.at(u, v) = 1;
  }
  const PointCloud c = Backproject(d, k, m);
  DepthMap d3 = d;
  for (float& z : d3.storage()) z *= 4.0f;
  const PointCloud c3 = Backproject(d3, k, m);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const std::size_t i = c.index(u, v);
      if (!c.valid[i]) continue;
      const Eigen::Vector3d p = Project(c.points[i], k);
      EXPECT_NEAR(p.x(), u, 1e-6);
      EXPECT_NEAR(p.y(), v, 1e-6);
      EXPECT_LT((c3.points[i] - 4.0 * c.points[i]).norm(), 1e-12 * c3.points[i].norm());
    }
  }
}

TEST(Camera, Validation) {
  CameraIntrinsics k = K640();
  EXPECT_NO_THROW(k.Validate());
  k.cx = 700;
  EXPECT_THROW(k.Validate(), InvalidArgument);
  EXPECT_NO_THROW(k.ValidateProjection());
  k.fx = 0;
  EXPECT_THROW(k.ValidateProjection(), InvalidArgument);
  const CameraIntrinsics good = K640();
  EXPECT_THROW(Backproject(DepthMap(10, 10, 1), good, Mask(10, 10, 1)), InvalidArgument);
}

TEST(Camera, PlaneIsCoplanar) {
  const CameraIntrinsics k = MakeCamera(64, 48, 80);
  const DepthMap d = PlaneDepth(k, 0.8, 0.3, -0.2);
  const PointCloud c = Backproject(d, k, Mask(k.width, k.height, 1, 1));
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(c.points.size()), 3);
  for (std::size_t i = 0; i < c.points.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = c.points[i];
  const Eigen::RowVector3d mean = pts.colwise().mean();
  pts.rowwise() -= mean;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(pts, Eigen::ComputeThinV);
  const Eigen::Vector3d n = svd.matrixV().col(2);
  EXPECT_LT((pts * n).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Mesh, SmallGrids) {
  const CameraIntrinsics k2 = MakeCamera(2, 2, 100);
  const TexturedMesh quad = testing::PlaneMesh(k2, 1.0);
  EXPECT_EQ(quad.vertices.size(), 4u);
  EXPECT_EQ(quad.triangles.size(), 2u);

  const CameraIntrinsics k3 = MakeCamera(3, 3, 100);
  const TexturedMesh grid = testing::PlaneMesh(k3, 1.0);
  ASSERT_EQ(grid.triangles.size(), 8u);
  for (const auto& n : grid.normals) {
    EXPECT_LT((n - grid.normals.front()).norm(), 1e-6);
    EXPECT_LT((n - Eigen::Vector3d(0, 0, -1)).norm(), 1e-6);
  }
}

TEST(Mesh, DepthJumpIsNotBridged) {
  const CameraIntrinsics k = MakeCamera(8, 6, 500);
  DepthMap d(k.width, k.height, 1);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) d.at(u, v) = u < 4 ? 0.5f : 0.6f;
  }
  const PointCloud c = Backproject(d, k, Mask(k.width, k.height, 1, 1));
  const TexturedMesh m = BuildMesh(c, testing::GradientRgb(k.width, k.height), nullptr);
  int crossing = 0;
  for (const auto& t : m.triangles) {
    double zmin = 1e9;
    double zmax = -1e9;
    for (int i : t) {
      zmin = std::min(zmin, m.vertices[i].z());
      zmax = std::max(zmax, m.vertices[i].z());
    }
    if (zmax - zmin > 0.05) ++crossing;
  }
  EXPECT_EQ(crossing, 0);
  EXPECT_EQ(m.triangles.size(), 2u * 6u * 5u);  // every quad but the column across the jump
}

TEST(Mesh, TiltedPlaneNormals) {
  const CameraIntrinsics k = MakeCamera(16, 16, 200);
  // z = z0 + Y: the plane normal is (0, -1, 1)/sqrt(2) up to sign, 45 deg from -z.
  const DepthMap d = PlaneDepth(k, 1.0, 0.0, 1.0);
  const PointCloud c = Backproject(d, k, Mask(k.width, k.height, 1, 1));
  const TexturedMesh m = BuildMesh(c, testing::GradientRgb(16, 16), nullptr);
  for (const auto& n : m.normals) {
    EXPECT_NEAR(testing::AngleDeg(n, Eigen::Vector3d(0, 0, -1)), 45.0, 1e-3);
  }
}

TEST(Mesh, InvariantsOnRandomSurface) {
  const CameraIntrinsics k = MakeCamera(40, 30, 60);
  SeededRng rng(8);
  DepthMap d(k.width, k.height, 1);
  Mask mask(k.width, k.height, 1);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      if (rng.Uniform() < 0.1) continue;
      d.at(u, v) = static_cast<float>(1.0 + 0.02 * std::sin(0.3 * u) * std::cos(0.2 * v));
      mask.at(u, v) = 1;
    }
  }
  const PointCloud c = Backproject(d, k, mask);
  const TexturedMesh m = BuildMesh(c, testing::GradientRgb(k.width, k.height), nullptr);
  EXPECT_LE(m.vertices.size(), c.valid_count());
  EXPECT_LE(m.triangles.size(), 2u * (k.width - 1) * (k.height - 1));
  for (const auto& n : FaceNormals(m)) EXPECT_NEAR(n.norm(), 1.0, 1e-9);
  for (const auto& s : m.semantic) EXPECT_EQ(s, Eigen::Vector3f::Zero());

  const Eigen::Matrix3d r = Rotation::FromAxisAngle(Eigen::Vector3d(1, 2, 3).normalized(), 0.9).matrix();
  for (const auto& t : m.triangles) {
    const Eigen::Vector3d a = m.vertices[t[0]], b = m.vertices[t[1]], cc = m.vertices[t[2]];
    const Eigen::Vector3d ra = r * a, rb = r * b, rc = r * cc;
    EXPECT_NEAR((rb - ra).norm(), (b - a).norm(), 1e-9 * (b - a).norm());
    const double area = (b - a).cross(cc - a).norm();
    EXPECT_NEAR((rb - ra).cross(rc - ra).norm(), area, 1e-9 * area);
  }
}

TEST(Mesh, SemanticsAreCarried) {
  const CameraIntrinsics k = MakeCamera(4, 4, 100);
  const DepthMap d = PlaneDepth(k, 1.0);
  const Mask all(4, 4, 1, 1);
  SemanticMap sem{ImageF(4, 4, 3, 0.25f), all};
  const TexturedMesh m = BuildMesh(Backproject(d, k, all), testing::GradientRgb(4, 4), &sem);
  for (const auto& s : m.semantic) EXPECT_EQ(s, Eigen::Vector3f::Constant(0.25f));
}

TEST(Mesh, DegenerateInputs) {
  const CameraIntrinsics k = MakeCamera(4, 4, 100);
  EXPECT_THROW(BuildMesh(Backproject(DepthMap(4, 4, 1), k, Mask(4, 4, 1, 1)),
                         testing::GradientRgb(4, 4), nullptr),
               DegenerateError);
  EXPECT_THROW(BuildMesh(Backproject(PlaneDepth(k, 1.0), k, Mask(4, 4, 1, 1)),
                         testing::GradientRgb(5, 4), nullptr),
               InvalidArgument);
}

TEST(Mesh, PlyExport) {
  const TexturedMesh m = testing::PlaneMesh(MakeCamera(3, 3, 100), 1.0);
  std::ostringstream out;
  WritePly(m, out);
  const std::string ply = out.str();
  EXPECT_EQ(ply.rfind("ply\n", 0), 0u);
  EXPECT_NE(ply.find("element vertex 9"), std::string::npos);
  EXPECT_NE(ply.find("element face 8"), std::string::npos);
}

}  // namespace
}  // namespace rcpose
