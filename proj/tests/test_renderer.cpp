#include <gtest/gtest.h>

#include "rcpose/app/synth.hpp"
#include "rcpose/errors.hpp"
#include "rcpose/renderer.hpp"
#include "support.hpp"

namespace rcpose {
namespace {

using testing::MakeCamera;

TexturedMesh SingleTriangle(const std::array<Eigen::Vector3d, 3>& v) {
  TexturedMesh m;
  for (const auto& p : v) {
    m.vertices.push_back(p);
    m.rgb.emplace_back(1.0f, 0.5f, 0.25f);
    m.semantic.emplace_back(static_cast<float>(p.x()), static_cast<float>(p.y()),
                            static_cast<float>(p.z()));
  }
  m.triangles.push_back({0, 1, 2});
  m.normals = FaceNormals(m);
  m.centroid = (v[0] + v[1] + v[2]) / 3.0;
  return m;
}

double Orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

TEST(Rasterizer, CoverageMatchesPointInTriangleScan) {
  const CameraIntrinsics k = MakeCamera(128, 128, 100.0);
  SeededRng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<Eigen::Vector3d, 3> v;
    for (auto& p : v) {
      const double u = rng.Uniform(-20.0, 148.0);
      const double w = rng.Uniform(-20.0, 148.0);
      p = Eigen::Vector3d((u - k.cx) / k.fx, (w - k.cy) / k.fy, 1.0);
    }
    const TexturedMesh mesh = SingleTriangle(v);
    const PosedGeometry posed = PoseMesh(mesh, Rotation(), false);
    RenderOutput out;
    Rasterize(mesh, posed, RenderCamera{k}, out);

    std::array<Eigen::Vector2d, 3> s;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector3d q = Project(posed.points[i], k);
      s[i] = q.head<2>();
    }
    std::size_t expected = 0;
    for (int y = 0; y < k.height; ++y) {
      for (int x = 0; x < k.width; ++x) {
        const Eigen::Vector2d p(x, y);
        const double d0 = Orient(s[0], s[1], p);
        const double d1 = Orient(s[1], s[2], p);
        const double d2 = Orient(s[2], s[0], p);
        const bool inside = (d0 > 0 && d1 > 0 && d2 > 0) || (d0 < 0 && d1 < 0 && d2 < 0);
        expected += inside;
        ASSERT_EQ(out.coverage.at(x, y) != 0, inside) << "trial " << trial << " pixel " << x << "," << y;
      }
    }
    EXPECT_EQ(out.covered_pixels(), expected);
  }
}

TEST(Rasterizer, PerspectiveCorrectAttributes) {
  const CameraIntrinsics k = MakeCamera(96, 96, 120.0);
  const TexturedMesh mesh = SingleTriangle(
      {Eigen::Vector3d(-0.4, -0.3, 1.0), Eigen::Vector3d(0.5, -0.2, 2.0), Eigen::Vector3d(0.0, 0.6, 1.5)});
  RenderOutput out;
  Rasterize(mesh, PoseMesh(mesh, Rotation(), false), RenderCamera{k}, out);
  const Eigen::Vector3d& a = mesh.vertices[0];
  const Eigen::Vector3d n = (mesh.vertices[1] - a).cross(mesh.vertices[2] - a);
  ASSERT_GT(out.covered_pixels(), 100u);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      if (!out.coverage.at(x, y)) continue;
      const Eigen::Vector3d ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d hit = ray * (n.dot(a) / n.dot(ray));
      EXPECT_NEAR(out.semantic.at(x, y, 0), hit.x(), 1e-5);
      EXPECT_NEAR(out.semantic.at(x, y, 1), hit.y(), 1e-5);
      EXPECT_NEAR(out.depth.at(x, y), hit.z(), 1e-5);
    }
  }
}

TEST(Rasterizer, NearerTriangleWins) {
  const CameraIntrinsics k = MakeCamera(64, 64, 64.0);
  auto tri = [](double z, double s, float red) {
    TexturedMesh m = SingleTriangle({Eigen::Vector3d(-s, -s, z), Eigen::Vector3d(s, -s, z),
                                     Eigen::Vector3d(0, s, z)});
    for (auto& c : m.rgb) c = Eigen::Vector3f(red, 0, 0);
    return m;
  };
  const TexturedMesh near_tri = tri(1.0, 0.3, 1.0f);
  const TexturedMesh far_tri = tri(2.0, 0.9, 0.5f);
  for (bool near_first : {true, false}) {
    TexturedMesh m;
    for (const TexturedMesh* part : near_first ? std::array{&near_tri, &far_tri}
                                               : std::array{&far_tri, &near_tri}) {
      const int base = static_cast<int>(m.vertices.size());
      m.vertices.insert(m.vertices.end(), part->vertices.begin(), part->vertices.end());
      m.rgb.insert(m.rgb.end(), part->rgb.begin(), part->rgb.end());
      m.semantic.insert(m.semantic.end(), part->semantic.begin(), part->semantic.end());
      m.triangles.push_back({base, base + 1, base + 2});
    }
    m.normals = FaceNormals(m);
    RenderOutput out;
    Rasterize(m, PoseMesh(m, Rotation(), false), RenderCamera{k}, out);
    RenderOutput near_only;
    Rasterize(near_tri, PoseMesh(near_tri, Rotation(), false), RenderCamera{k}, near_only);
    std::size_t shared = 0;
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (!near_only.coverage.at(x, y)) continue;
        ++shared;
        EXPECT_NEAR(out.rgb.at(x, y, 0), 1.0f, 1e-6);
        EXPECT_NEAR(out.depth.at(x, y), 1.0f, 1e-6);
      }
    }
    EXPECT_GT(shared, 50u);
  }
}

TEST(Culling, CubeShowsOnlyFacesTowardsCamera) {
  const TexturedMesh cube = testing::CubeMesh(Eigen::Vector3d(0, 0, 3), 0.5);
  const CameraIntrinsics k = MakeCamera(96, 96, 100.0);
  for (const Rotation& pose : testing::RandomRotations(100, 77)) {
    const PosedGeometry posed = PoseMesh(cube, pose, true);
    TexturedMesh visible = cube;
    visible.triangles.clear();
    visible.normals.clear();
    for (std::size_t t = 0; t < cube.triangles.size(); ++t) {
      const auto& tri = cube.triangles[t];
      const Eigen::Vector3d& a = posed.points[tri[0]];
      const Eigen::Vector3d n = (posed.points[tri[1]] - a).cross(posed.points[tri[2]] - a);
      const bool faces_camera = n.z() < 0.0;
      EXPECT_EQ(posed.face_visible[t] != 0, faces_camera);
      if (faces_camera) {
        visible.triangles.push_back(tri);
        visible.normals.push_back(cube.normals[t]);
      }
    }
    EXPECT_GE(visible.triangles.size(), 2u);
    EXPECT_LE(visible.triangles.size(), 6u);
    const RenderOutput culled = Render(cube, pose, RenderCamera{k}, true);
    RenderOutput reference;
    Rasterize(visible, PoseMesh(visible, pose, false), RenderCamera{k}, reference);
    EXPECT_EQ(culled.coverage, reference.coverage);
    EXPECT_EQ(culled.rgb, reference.rgb);
  }
}

TEST(Culling, FlippedPlaneDisappears) {
  const CameraIntrinsics k = MakeCamera(32, 32, 40.0);
  const TexturedMesh plane = testing::PlaneMesh(k, 1.0);
  EXPECT_GT(Render(plane, Rotation(), RenderCamera{k}, true).covered_pixels(), 0u);
  EXPECT_EQ(Render(plane, Rotation::AboutY(kPi), RenderCamera{k}, true).covered_pixels(), 0u);
  EXPECT_GT(Render(plane, Rotation::AboutY(kPi), RenderCamera{k}, false).covered_pixels(), 0u);
}

TEST(Culling, CoverageShrinksTowardsEdgeOn) {
  const CameraIntrinsics k = MakeCamera(64, 64, 60.0);
  const TexturedMesh plane = testing::PlaneMesh(MakeCamera(32, 32, 60.0), 2.0);
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (double deg : {0.0, 30.0, 60.0, 85.0}) {
    const std::size_t covered =
        Render(plane, Rotation::AboutY(DegToRad(deg)), RenderCamera{k}, true).covered_pixels();
    EXPECT_LT(covered, previous) << deg;
    previous = covered;
  }
}

TEST(Culling, IdentityPoseNeedsNoCulling) {
  const CameraIntrinsics k = MakeCamera(48, 48, 50.0);
  const TexturedMesh plane = testing::PlaneMesh(k, 1.5);
  const RenderOutput on = Render(plane, Rotation(), RenderCamera{k}, true);
  const RenderOutput off = Render(plane, Rotation(), RenderCamera{k}, false);
  EXPECT_EQ(on.coverage, off.coverage);
  EXPECT_EQ(on.rgb, off.rgb);
}

TEST(Render, IdentityReproducesReference) {
  app::SynthOptions options;
  options.seed = 3;
  options.semantics = false;
  const app::SyntheticScene scene = app::GenerateScene(options);
  const PointCloud cloud =
      Backproject(scene.reference_depth, scene.intrinsics, scene.reference_mask);
  const TexturedMesh mesh = BuildMesh(cloud, scene.reference_rgb, nullptr);
  const RenderOutput out = Render(mesh, Rotation(), RenderCamera{scene.intrinsics}, true);
  ASSERT_GT(out.covered_pixels(), 1000u);
  for (int y = 0; y < scene.intrinsics.height; ++y) {
    for (int x = 0; x < scene.intrinsics.width; ++x) {
      if (!out.coverage.at(x, y)) continue;
      ASSERT_TRUE(scene.reference_mask.at(x, y));
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(out.rgb.at(x, y, c), scene.reference_rgb.at(x, y, c), 1.0 / 255.0);
      }
    }
  }
}

TEST(Render, BatchMatchesSingleRenders) {
  const CameraIntrinsics k = MakeCamera(48, 48, 60.0);
  const TexturedMesh cube = testing::CubeMesh(Eigen::Vector3d(0, 0, 3), 0.6);
  const std::vector<Rotation> single{Rotation()};
  const auto one = RenderBatch(cube, single, RenderCamera{k}, true, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].rgb, Render(cube, Rotation(), RenderCamera{k}, true).rgb);

  const auto poses = testing::RandomRotations(24, 5);
  const auto sequential = RenderBatch(cube, poses, RenderCamera{k}, true, 1);
  const auto parallel = RenderBatch(cube, poses, RenderCamera{k}, true, 4);
  ASSERT_EQ(sequential.size(), poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_EQ(sequential[i].rgb, parallel[i].rgb);
    EXPECT_EQ(sequential[i].depth, parallel[i].depth);
    EXPECT_EQ(sequential[i].coverage, Render(cube, poses[i], RenderCamera{k}, true).coverage);
  }
}

TEST(Render, RejectsBadCamera) {
  CameraIntrinsics k = MakeCamera(16, 16, 10.0);
  k.fx = -1;
  const TexturedMesh cube = testing::CubeMesh(Eigen::Vector3d(0, 0, 3), 0.6);
  EXPECT_THROW(Render(cube, Rotation(), RenderCamera{k}, true), InvalidArgument);
  EXPECT_THROW(PoseMesh(TexturedMesh{}, Rotation(), true), InvalidArgument);
}

}  // namespace
}  // namespace rcpose
