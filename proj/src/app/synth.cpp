#include "rcpose/app/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rcpose/app/manifest.hpp"
#include "rcpose/app/png_io.hpp"
#include "rcpose/errors.hpp"
#include "rcpose/evaluation.hpp"
#include "rcpose/renderer.hpp"

namespace rcpose::app {

namespace {

constexpr double kObjectDistance = 0.5;  // metres

// Position attribute range: (p - centre) / (kPositionSpan * radius) + 0.5.
constexpr double kPositionSpan = 4.0;

}  // namespace

void SynthOptions::Validate() const {
  if (!(min_angle_deg > 0.0 && max_angle_deg < 90.0 && min_angle_deg <= max_angle_deg)) {
    throw ConfigurationError("synth: rotation bounds must satisfy 0 < min <= max < 90 degrees");
  }
  if (image_size < 64) throw ConfigurationError("synth: image size must be at least 64");
  if (!(depth_scale > 0.0)) throw ConfigurationError("synth: depth_scale must be positive");
  if (semantics && (feature_dims < 3 || patch_size < 1)) {
    throw ConfigurationError("synth: need >= 3 feature dims and a positive patch size");
  }
}

CameraIntrinsics SynthIntrinsics(int image_size) {
  CameraIntrinsics k;
  k.fx = k.fy = 1.25 * image_size;
  k.cx = k.cy = 0.5 * (image_size - 1);
  k.width = k.height = image_size;
  return k;
}

ProceduralObject::ProceduralObject(std::uint64_t seed, const CameraIntrinsics& k,
                                   double depth_scale)
    : k_(k), depth_unit_(depth_scale / 1000.0) {
  SeededRng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  center_ = {rng.Uniform(-0.01, 0.01), rng.Uniform(-0.01, 0.01), kObjectDistance};
  radius_ = rng.Uniform(0.085, 0.105);
  height_ = radius_ * rng.Uniform(0.5, 0.8);
  lobe2_ = rng.Uniform(0.1, 0.2);
  phase2_ = rng.Uniform(0.0, 2.0 * kPi);
  lobe3_ = rng.Uniform(0.05, 0.15);
  phase3_ = rng.Uniform(0.0, 2.0 * kPi);
  bump_ = radius_ * rng.Uniform(0.04, 0.08);
  bump_fx_ = rng.Uniform(2.0, 4.0);
  bump_fy_ = rng.Uniform(2.0, 4.0);
  bump_px_ = rng.Uniform(0.0, 2.0 * kPi);
  bump_py_ = rng.Uniform(0.0, 2.0 * kPi);
  tilt_x_ = rng.Uniform(-0.2, 0.2);
  tilt_y_ = rng.Uniform(-0.2, 0.2);
  for (int c = 0; c < 3; ++c) {
    base_[c] = static_cast<float>(rng.Uniform(0.35, 0.65));
    tint_x_[c] = static_cast<float>(rng.Uniform(-0.3, 0.3));
    tint_y_[c] = static_cast<float>(rng.Uniform(-0.3, 0.3));
  }
  checker_ = rng.Uniform(0.35, 0.5);
  constexpr int kMaxDims = 64;
  feature_freq_.resize(kMaxDims, 3);
  feature_phase_.resize(kMaxDims);
  for (int i = 0; i < kMaxDims; ++i) {
    const Eigen::Vector3d dir = rng.UnitVector();
    feature_freq_.row(i) = dir.transpose() * rng.Uniform(1.0, 3.0);
    feature_phase_[i] = rng.Uniform(0.0, 2.0 * kPi);
  }
}

std::optional<double> ProceduralObject::Depth(int u, int v) const {
  const double dx = (u - k_.cx) / k_.fx * center_.z() - center_.x();
  const double dy = (v - k_.cy) / k_.fy * center_.z() - center_.y();
  const double r = std::hypot(dx, dy);
  const double theta = std::atan2(dy, dx);
  const double rho =
      radius_ * (1.0 + lobe2_ * std::cos(2.0 * theta + phase2_) +
                 lobe3_ * std::cos(3.0 * theta + phase3_));
  const double s = r / rho;
  if (s >= 1.0) return std::nullopt;
  const double z = center_.z() - height_ * (1.0 - s * s) +
                   bump_ * std::sin(bump_fx_ * dx / radius_ + bump_px_) *
                       std::sin(bump_fy_ * dy / radius_ + bump_py_) +
                   tilt_x_ * dx + tilt_y_ * dy;
  return std::round(z / depth_unit_) * depth_unit_;
}

Eigen::Vector3f ProceduralObject::Color(const Eigen::Vector3d& p) const {
  const double lx = (p.x() - center_.x()) / radius_;
  const double ly = (p.y() - center_.y()) / radius_;
  Eigen::Vector3f c = base_ + tint_x_ * static_cast<float>(lx) + tint_y_ * static_cast<float>(ly);
  const auto cell = static_cast<long>(std::floor(lx / checker_)) +
                    static_cast<long>(std::floor(ly / checker_));
  if (cell % 2 != 0) c *= 0.55f;
  return c.cwiseMax(0.0f).cwiseMin(1.0f);
}

std::vector<float> ProceduralObject::Feature(const Eigen::Vector3d& p, int dims) const {
  const Eigen::Vector3d local = (p - center_) / radius_;
  std::vector<float> f(static_cast<std::size_t>(dims));
  for (int i = 0; i < dims; ++i) {
    const int row = i % static_cast<int>(feature_freq_.rows());
    f[i] = static_cast<float>(
        std::sin(feature_freq_.row(row).dot(local) + feature_phase_[row] + 0.37 * (i / 64)));
  }
  return f;
}

namespace {

// Averages per-pixel features over the covered pixels of each patch.
FeatureMap PoolFeatures(const std::vector<std::vector<float>>& per_pixel, const Mask& mask,
                        int dims, int patch) {
  FeatureMap f;
  f.width = static_cast<std::uint32_t>((mask.width() + patch - 1) / patch);
  f.height = static_cast<std::uint32_t>((mask.height() + patch - 1) / patch);
  f.channels = static_cast<std::uint32_t>(dims);
  f.patch_size = static_cast<std::uint32_t>(patch);
  f.data.assign(std::size_t{f.width} * f.height * f.channels, 0.0f);
  std::vector<int> counts(std::size_t{f.width} * f.height, 0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) == 0) continue;
      const auto tx = static_cast<std::uint32_t>(
          static_cast<std::uint64_t>(x) * f.width / static_cast<std::uint64_t>(mask.width()));
      const auto ty = static_cast<std::uint32_t>(
          static_cast<std::uint64_t>(y) * f.height / static_cast<std::uint64_t>(mask.height()));
      float* dst = f.token(tx, ty);
      const auto& src = per_pixel[mask.index(x, y)];
      for (int c = 0; c < dims; ++c) dst[c] += src[c];
      ++counts[std::size_t{ty} * f.width + tx];
    }
  }
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] == 0) continue;
    for (int c = 0; c < dims; ++c) f.data[t * f.channels + c] /= static_cast<float>(counts[t]);
  }
  return f;
}

}  // namespace

SyntheticScene GenerateScene(const SynthOptions& options) {
  options.Validate();
  SyntheticScene scene;
  scene.seed = options.seed;
  scene.intrinsics = SynthIntrinsics(options.image_size);
  scene.depth_scale = options.depth_scale;
  const CameraIntrinsics& k = scene.intrinsics;
  const ProceduralObject object(options.seed, k, options.depth_scale);

  scene.reference_rgb = ImageF(k.width, k.height, 3);
  scene.reference_depth = DepthMap(k.width, k.height, 1);
  scene.reference_mask = Mask(k.width, k.height, 1);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const auto z = object.Depth(u, v);
      if (!z) continue;
      scene.reference_depth.at(u, v) = static_cast<float>(*z);
      scene.reference_mask.at(u, v) = 1;
    }
  }
  const PointCloud cloud = Backproject(scene.reference_depth, k, scene.reference_mask);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const std::size_t i = cloud.index(u, v);
      if (!cloud.valid[i]) continue;
      const Eigen::Vector3f c = object.Color(cloud.points[i]);
      for (int ch = 0; ch < 3; ++ch) scene.reference_rgb.at(u, v, ch) = c[ch];
    }
  }

  // The mesh carries reference-frame positions as its semantic attribute so
  // the query render reveals which surface point each pixel sees.
  const double span = kPositionSpan * object.radius();
  SemanticMap positions{ImageF(k.width, k.height, 3), scene.reference_mask};
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const std::size_t i = cloud.index(u, v);
      if (!cloud.valid[i]) continue;
      const Eigen::Vector3d rel = (cloud.points[i] - object.center()) / span;
      for (int ch = 0; ch < 3; ++ch) positions.values.at(u, v, ch) = static_cast<float>(rel[ch] + 0.5);
    }
  }
  const TexturedMesh mesh = BuildMesh(cloud, scene.reference_rgb, &positions);

  SeededRng rng(options.seed);
  const Eigen::Vector3d axis = rng.UnitVector();
  const double angle = DegToRad(rng.Uniform(options.min_angle_deg, options.max_angle_deg));
  scene.ground_truth = Rotation::FromAxisAngle(axis, angle);

  const RenderOutput query = Render(mesh, scene.ground_truth, RenderCamera{k}, true);
  scene.query_rgb = query.rgb;
  scene.query_mask = query.coverage;

  if (options.semantics) {
    const int dims = options.feature_dims;
    std::vector<std::vector<float>> ref_pixels(cloud.points.size());
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      if (cloud.valid[i]) ref_pixels[i] = object.Feature(cloud.points[i], dims);
    }
    scene.reference_features = PoolFeatures(ref_pixels, scene.reference_mask, dims, options.patch_size);

    std::vector<std::vector<float>> query_pixels(query.coverage.pixel_count());
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        if (query.coverage.at(u, v) == 0) continue;
        Eigen::Vector3d p;
        for (int ch = 0; ch < 3; ++ch) p[ch] = (query.semantic.at(u, v, ch) - 0.5) * span;
        query_pixels[query.coverage.index(u, v)] = object.Feature(p + object.center(), dims);
      }
    }
    scene.query_features = PoolFeatures(query_pixels, scene.query_mask, dims, options.patch_size);
  }
  return scene;
}

void WriteScene(const SyntheticScene& scene, const SynthOptions& options,
                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create scene directory");

  SaveRgb(scene.reference_rgb, dir / "reference_rgb.png");
  SaveDepth(scene.reference_depth, scene.depth_scale, dir / "reference_depth.png");
  SaveMask(scene.reference_mask, dir / "reference_mask.png");
  SaveRgb(scene.query_rgb, dir / "query_rgb.png");
  SaveMask(scene.query_mask, dir / "query_mask.png");
  if (scene.reference_features) SaveFeatures(*scene.reference_features, dir / "reference_features.rpf");
  if (scene.query_features) SaveFeatures(*scene.query_features, dir / "query_features.rpf");

  nlohmann::ordered_json info;
  info["seed"] = scene.seed;
  info["min_angle_deg"] = options.min_angle_deg;
  info["max_angle_deg"] = options.max_angle_deg;
  info["intrinsics"] = IntrinsicsToJson(scene.intrinsics, scene.depth_scale);
  info["ground_truth"] = RotationToJson(scene.ground_truth);
  const auto q = scene.ground_truth.quaternion();
  info["ground_truth_quaternion"] = {q.w(), q.x(), q.y(), q.z()};
  info["ground_truth_angle_deg"] = RadToDeg(GeodesicDistance(Rotation(), scene.ground_truth));
  WriteJsonFile(info, dir / "scene.json");

  Manifest manifest;
  ObjectEntry object;
  object.name = "synth_" + std::to_string(scene.seed);
  object.intrinsics = scene.intrinsics;
  object.depth_scale = scene.depth_scale;
  FrameEntry reference;
  reference.id = "reference";
  reference.rgb = "reference_rgb.png";
  reference.depth = "reference_depth.png";
  reference.mask = "reference_mask.png";
  if (scene.reference_features) reference.features = "reference_features.rpf";
  reference.rotation = Rotation();
  FrameEntry query;
  query.id = "query";
  query.rgb = "query_rgb.png";
  query.mask = "query_mask.png";
  if (scene.query_features) query.features = "query_features.rpf";
  query.rotation = scene.ground_truth;
  object.frames = {reference, query};
  manifest.objects.push_back(object);
  SaveManifest(manifest, dir / "manifest.json");
}

}  // namespace rcpose::app
