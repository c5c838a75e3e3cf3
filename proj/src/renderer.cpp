#include "rcpose/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rcpose/errors.hpp"

namespace rcpose {

namespace {

constexpr double kNearPlane = 1e-6;

struct ScreenVertex {
  double x, y, inv_z;
};

// Oriented edge a->b with E(p) = (b - a) x (p - a); E > 0 on the interior
// once the triangle is wound positively.
struct Edge {
  double a, b, c;  // E(x, y) = a*x + b*y + c
  bool owns_boundary;

  Edge(const ScreenVertex& p, const ScreenVertex& q) {
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    a = -dy;
    b = dx;
    c = dy * p.x - dx * p.y;
    // Top-left rule (y grows downwards).
    owns_boundary = dy < 0.0 || (dy == 0.0 && dx > 0.0);
  }
  double Eval(double x, double y) const { return a * x + b * y + c; }
  bool Inside(double e) const { return e > 0.0 || (e == 0.0 && owns_boundary); }
};

}  // namespace

void RenderOutput::Reset(int width, int height) {
  if (rgb.width() == width && rgb.height() == height && rgb.channels() == 3) {
    std::fill(rgb.storage().begin(), rgb.storage().end(), 0.0f);
    std::fill(semantic.storage().begin(), semantic.storage().end(), 0.0f);
    std::fill(coverage.storage().begin(), coverage.storage().end(), 0);
    std::fill(depth.storage().begin(), depth.storage().end(),
              std::numeric_limits<float>::infinity());
    return;
  }
  rgb = ImageF(width, height, 3);
  semantic = ImageF(width, height, 3);
  coverage = Mask(width, height, 1);
  depth = ImageF(width, height, 1, std::numeric_limits<float>::infinity());
}

PosedGeometry PoseMesh(const TexturedMesh& mesh, const Rotation& pose, bool cull) {
  if (mesh.empty()) throw InvalidArgument("PoseMesh: empty mesh");
  const Eigen::Matrix3d r = pose.matrix();
  PosedGeometry posed;
  posed.points.resize(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    posed.points[i] = r * (mesh.vertices[i] - mesh.centroid) + mesh.centroid;
  }
  posed.face_visible.assign(mesh.triangles.size(), 1);
  posed.visible_faces = mesh.triangles.size();
  if (cull) {
    const Eigen::RowVector3d view_row = r.row(2);  // (R n) . (0,0,1)
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      if (view_row.dot(mesh.normals[t]) >= 0.0) {
        posed.face_visible[t] = 0;
        --posed.visible_faces;
      }
    }
  }
  return posed;
}

std::optional<ImageBounds> ProjectedBounds(const TexturedMesh& mesh,
                                           const PosedGeometry& posed,
                                           const CameraIntrinsics& k) {
  ImageBounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  bool any = false;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (!posed.face_visible[t]) continue;
    const auto& tri = mesh.triangles[t];
    if (posed.points[tri[0]].z() <= kNearPlane || posed.points[tri[1]].z() <= kNearPlane ||
        posed.points[tri[2]].z() <= kNearPlane) {
      continue;
    }
    for (int i : tri) {
      const Eigen::Vector3d& p = posed.points[i];
      const double u = k.fx * p.x() / p.z() + k.cx;
      const double v = k.fy * p.y() / p.z() + k.cy;
      b.x_min = std::min(b.x_min, u);
      b.x_max = std::max(b.x_max, u);
      b.y_min = std::min(b.y_min, v);
      b.y_max = std::max(b.y_max, v);
    }
    any = true;
  }
  if (!any) return std::nullopt;
  return b;
}

void Rasterize(const TexturedMesh& mesh, const PosedGeometry& posed,
               const RenderCamera& camera, RenderOutput& out) {
  const CameraIntrinsics& k = camera.intrinsics;
  const int width = k.width;
  const int height = k.height;
  out.Reset(width, height);

  std::vector<ScreenVertex> screen(posed.points.size());
  for (std::size_t i = 0; i < posed.points.size(); ++i) {
    const Eigen::Vector3d& p = posed.points[i];
    if (p.z() <= kNearPlane) {
      screen[i] = {0.0, 0.0, -1.0};
      continue;
    }
    const double inv_z = 1.0 / p.z();
    screen[i] = {k.fx * p.x() * inv_z + k.cx, k.fy * p.y() * inv_z + k.cy, inv_z};
  }

  float* rgb = out.rgb.storage().data();
  float* sem = out.semantic.storage().data();
  float* depth = out.depth.storage().data();
  std::uint8_t* cover = out.coverage.storage().data();

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (!posed.face_visible[t]) continue;
    std::array<int, 3> idx = mesh.triangles[t];
    if (screen[idx[0]].inv_z <= 0.0 || screen[idx[1]].inv_z <= 0.0 ||
        screen[idx[2]].inv_z <= 0.0) {
      continue;
    }
    const ScreenVertex* v0 = &screen[idx[0]];
    const ScreenVertex* v1 = &screen[idx[1]];
    const ScreenVertex* v2 = &screen[idx[2]];
    double area = (v1->x - v0->x) * (v2->y - v0->y) - (v1->y - v0->y) * (v2->x - v0->x);
    if (area == 0.0 || !std::isfinite(area)) continue;
    if (area < 0.0) {
      std::swap(v1, v2);
      std::swap(idx[1], idx[2]);
      area = -area;
    }
    const int x_lo = std::max(0, static_cast<int>(std::ceil(std::min({v0->x, v1->x, v2->x}))));
    const int x_hi =
        std::min(width - 1, static_cast<int>(std::floor(std::max({v0->x, v1->x, v2->x}))));
    const int y_lo = std::max(0, static_cast<int>(std::ceil(std::min({v0->y, v1->y, v2->y}))));
    const int y_hi =
        std::min(height - 1, static_cast<int>(std::floor(std::max({v0->y, v1->y, v2->y}))));
    if (x_lo > x_hi || y_lo > y_hi) continue;

    const Edge e0(*v1, *v2);  // weight of v0
    const Edge e1(*v2, *v0);  // weight of v1
    const Edge e2(*v0, *v1);  // weight of v2
    const Eigen::Vector3f& c0 = mesh.rgb[idx[0]];
    const Eigen::Vector3f& c1 = mesh.rgb[idx[1]];
    const Eigen::Vector3f& c2 = mesh.rgb[idx[2]];
    const Eigen::Vector3f& s0 = mesh.semantic[idx[0]];
    const Eigen::Vector3f& s1 = mesh.semantic[idx[1]];
    const Eigen::Vector3f& s2 = mesh.semantic[idx[2]];
    const double inv_area = 1.0 / area;

    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        const double w0 = e0.Eval(x, y);
        const double w1 = e1.Eval(x, y);
        const double w2 = e2.Eval(x, y);
        if (!(e0.Inside(w0) && e1.Inside(w1) && e2.Inside(w2))) continue;
        // Perspective-correct weights: barycentrics divided by depth.
        const double p0 = w0 * inv_area * v0->inv_z;
        const double p1 = w1 * inv_area * v1->inv_z;
        const double p2 = w2 * inv_area * v2->inv_z;
        const double sum = p0 + p1 + p2;
        const double z = 1.0 / sum;
        const std::size_t pix = static_cast<std::size_t>(y) * width + x;
        if (!(z < depth[pix])) continue;
        depth[pix] = static_cast<float>(z);
        cover[pix] = 1;
        const float a0 = static_cast<float>(p0 * z);
        const float a1 = static_cast<float>(p1 * z);
        const float a2 = static_cast<float>(p2 * z);
        for (int c = 0; c < 3; ++c) {
          rgb[3 * pix + c] = a0 * c0[c] + a1 * c1[c] + a2 * c2[c];
          sem[3 * pix + c] = a0 * s0[c] + a1 * s1[c] + a2 * s2[c];
        }
      }
    }
  }
}

RenderOutput Render(const TexturedMesh& mesh, const Rotation& pose,
                    const RenderCamera& camera, bool cull) {
  camera.intrinsics.ValidateProjection();
  RenderOutput out;
  Rasterize(mesh, PoseMesh(mesh, pose, cull), camera, out);
  return out;
}

std::vector<RenderOutput> RenderBatch(const TexturedMesh& mesh,
                                      const std::vector<Rotation>& poses,
                                      const RenderCamera& camera, bool cull,
                                      int workers) {
  std::vector<RenderOutput> outputs(poses.size());
  ParallelFor(poses.size(), workers, [&](std::size_t i) {
    try {
      outputs[i] = Render(mesh, poses[i], camera, cull);
    } catch (const Error& e) {
      throw InvalidArgument("candidate " + std::to_string(i) + ": " + e.what());
    }
  });
  return outputs;
}

}  // namespace rcpose
