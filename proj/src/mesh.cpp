#include "rcpose/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rcpose/errors.hpp"

namespace rcpose {

namespace {

Eigen::Vector3f Attribute(const ImageF& image, int u, int v) {
  return {image.at(u, v, 0), image.at(u, v, 1), image.at(u, v, 2)};
}

double MaxEdge(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
               const Eigen::Vector3d& c) {
  return std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
}

}  // namespace

TexturedMesh BuildMesh(const PointCloud& cloud, const ImageF& rgb,
                       const SemanticMap* semantic, const MeshOptions& options) {
  const int w = cloud.width;
  const int h = cloud.height;
  if (rgb.width() != w || rgb.height() != h || rgb.channels() != 3) {
    throw InvalidArgument("BuildMesh: rgb image does not match the point grid");
  }
  if (semantic != nullptr &&
      (semantic->values.width() != w || semantic->values.height() != h)) {
    throw InvalidArgument("BuildMesh: semantic map does not match the point grid");
  }
  if (cloud.valid_count() < 3) throw DegenerateError("BuildMesh: fewer than 3 valid points");

  auto valid = [&](int u, int v) { return cloud.valid[cloud.index(u, v)] != 0; };
  auto point = [&](int u, int v) -> const Eigen::Vector3d& {
    return cloud.points[cloud.index(u, v)];
  };

  std::vector<double> quad_edges;
  for (int v = 0; v + 1 < h; ++v) {
    for (int u = 0; u + 1 < w; ++u) {
      if (!(valid(u, v) && valid(u + 1, v) && valid(u, v + 1) && valid(u + 1, v + 1))) {
        continue;
      }
      quad_edges.push_back((point(u + 1, v) - point(u, v)).norm());
      quad_edges.push_back((point(u, v + 1) - point(u, v)).norm());
    }
  }
  if (quad_edges.empty()) throw DegenerateError("BuildMesh: no fully valid pixel quad");
  auto mid = quad_edges.begin() + static_cast<std::ptrdiff_t>(quad_edges.size() / 2);
  std::nth_element(quad_edges.begin(), mid, quad_edges.end());
  const double threshold =
      std::max(options.min_discontinuity, options.median_factor * *mid);

  TexturedMesh mesh;
  std::vector<int> vertex_of(cloud.points.size(), -1);
  auto vertex = [&](int u, int v) {
    const std::size_t i = cloud.index(u, v);
    if (vertex_of[i] < 0) {
      vertex_of[i] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(cloud.points[i]);
      mesh.rgb.push_back(Attribute(rgb, u, v));
      mesh.semantic.push_back(semantic ? Attribute(semantic->values, u, v)
                                       : Eigen::Vector3f::Zero());
    }
    return vertex_of[i];
  };

  struct Corner {
    int u, v;
  };
  auto emit = [&](Corner a, Corner b, Corner c) {
    const Eigen::Vector3d& pa = point(a.u, a.v);
    const Eigen::Vector3d& pb = point(b.u, b.v);
    const Eigen::Vector3d& pc = point(c.u, c.v);
    if (MaxEdge(pa, pb, pc) > threshold) return;
    const Eigen::Vector3d n = (pb - pa).cross(pc - pa);
    const double len = n.norm();
    if (!(len > 1e-18)) return;
    mesh.triangles.push_back({vertex(a.u, a.v), vertex(b.u, b.v), vertex(c.u, c.v)});
    mesh.normals.push_back(n / len);
  };

  for (int v = 0; v + 1 < h; ++v) {
    for (int u = 0; u + 1 < w; ++u) {
      if (!(valid(u, v) && valid(u + 1, v) && valid(u, v + 1) && valid(u + 1, v + 1))) {
        continue;
      }
      const Corner a{u, v}, b{u + 1, v}, c{u, v + 1}, d{u + 1, v + 1};
      const double diag_ad = (point(d.u, d.v) - point(a.u, a.v)).norm();
      const double diag_bc = (point(c.u, c.v) - point(b.u, b.v)).norm();
      if (diag_ad <= diag_bc) {
        emit(a, c, d);
        emit(a, d, b);
      } else {
        emit(a, c, b);
        emit(b, c, d);
      }
    }
  }
  if (mesh.triangles.empty()) {
    throw DegenerateError("BuildMesh: no triangles left after discontinuity filtering");
  }

  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& p : mesh.vertices) sum += p;
  mesh.centroid = sum / static_cast<double>(mesh.vertices.size());
  return mesh;
}

std::vector<Eigen::Vector3d> FaceNormals(const TexturedMesh& mesh) {
  if (mesh.empty()) throw InvalidArgument("FaceNormals: empty mesh");
  std::vector<Eigen::Vector3d> normals;
  normals.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Eigen::Vector3d& a = mesh.vertices[t[0]];
    normals.push_back((mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).normalized());
  }
  return normals;
}

void WritePly(const TexturedMesh& mesh, std::ostream& out) {
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  auto byte = [](float c) {
    return static_cast<int>(std::lround(std::clamp(c, 0.0f, 1.0f) * 255.0f));
  };
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& p = mesh.vertices[i];
    const auto& c = mesh.rgb[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << byte(c.x()) << ' '
        << byte(c.y()) << ' ' << byte(c.z()) << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
}

}  // namespace rcpose
