#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "rcpose/camera.hpp"
#include "rcpose/image.hpp"
#include "rcpose/mesh.hpp"
#include "rcpose/rotations.hpp"
#include "rcpose/semantics.hpp"

namespace rcpose::app {

struct SynthOptions {
  std::uint64_t seed = 0;
  double min_angle_deg = 5.0;   // relative rotation magnitude bounds
  double max_angle_deg = 60.0;
  int image_size = 192;
  double depth_scale = 0.1;     // depth PNG unit = 0.1 mm
  bool semantics = true;
  int feature_dims = 16;
  int patch_size = 8;

  void Validate() const;
};

// Procedural object seen by the reference camera: a blobby silhouette with a
// bumpy, tilted paraboloid front surface. Depths are quantised to the depth
// PNG unit, so the stored file reproduces them exactly.
class ProceduralObject {
 public:
  ProceduralObject(std::uint64_t seed, const CameraIntrinsics& k, double depth_scale);

  // Metric depth at the pixel centre, nullopt outside the silhouette.
  std::optional<double> Depth(int u, int v) const;
  // Colour of the surface point p (reference camera frame).
  Eigen::Vector3f Color(const Eigen::Vector3d& p) const;
  // Smooth d-dimensional feature field over the surface.
  std::vector<float> Feature(const Eigen::Vector3d& p, int dims) const;

  double radius() const noexcept { return radius_; }
  const Eigen::Vector3d& center() const noexcept { return center_; }

 private:
  CameraIntrinsics k_;
  double depth_unit_;   // metres
  Eigen::Vector3d center_;
  double radius_;       // metres
  double height_;       // dome height, metres
  double lobe2_, phase2_, lobe3_, phase3_;
  double bump_, bump_fx_, bump_fy_, bump_px_, bump_py_;
  double tilt_x_, tilt_y_;
  Eigen::Vector3f base_, tint_x_, tint_y_;
  double checker_;
  Eigen::MatrixXd feature_freq_;  // dims x 3
  Eigen::VectorXd feature_phase_;
};

struct SyntheticScene {
  std::uint64_t seed = 0;
  CameraIntrinsics intrinsics;
  double depth_scale = 0.1;
  ImageF reference_rgb;
  DepthMap reference_depth;
  Mask reference_mask;
  ImageF query_rgb;
  Mask query_mask;
  std::optional<FeatureMap> reference_features;
  std::optional<FeatureMap> query_features;
  Rotation ground_truth;  // query = ground_truth applied to the reference mesh
};

CameraIntrinsics SynthIntrinsics(int image_size);

// Reference view of the procedural object, its 2.5D mesh, and a query
// rendered from that mesh at a random rotation with magnitude in the bounds.
SyntheticScene GenerateScene(const SynthOptions& options);

// Writes PNGs, RPF1 features, scene.json and a single-object manifest.json.
void WriteScene(const SyntheticScene& scene, const SynthOptions& options,
                const std::filesystem::path& dir);

}  // namespace rcpose::app
