#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "rcpose/image.hpp"

namespace rcpose {

// Patch-feature grid (e.g. vision-transformer tokens), row-major (y, x, channel).
// The grid spans the full image it was extracted from: token (i, j) covers
// pixels with floor(x * width / W) == i and floor(y * height / H) == j.
struct FeatureMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;
  std::uint32_t patch_size = 0;
  std::vector<float> data;

  const float* token(std::uint32_t x, std::uint32_t y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }
  float* token(std::uint32_t x, std::uint32_t y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }
};

// Fixed projection fitted on the reference and reused for every query.
struct PcaTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;            // d x 3, orthonormal columns
  Eigen::Vector3d eigenvalues;      // top three, descending
  double total_variance = 0.0;      // trace of the masked covariance
  Eigen::Vector3d out_min;          // reference projection range, per channel
  Eigen::Vector3d out_max;

  int dims() const { return static_cast<int>(mean.size()); }
  Eigen::Vector3d Project(const float* feature) const;
};

// Three-channel semantic image in [0, 1] plus the mask it is valid on.
struct SemanticMap {
  ImageF values;
  Mask valid;
};

// Mask lookup at the pixel under the centre of token (x, y).
bool TokenMasked(const FeatureMap& features, const Mask& mask, std::uint32_t x,
                 std::uint32_t y);

// Mean and top-3 principal directions of the masked tokens; each basis
// column's largest-magnitude entry is positive. Throws DegenerateError when
// fewer than 3 tokens are masked or the masked covariance has rank < 3.
PcaTransform FitPca(const FeatureMap& features, const Mask& mask);

// Projects every token, normalizes by the transform's reference range,
// clamps to [0, 1], nearest-neighbour upsamples to target_width x
// target_height and zeroes pixels outside `mask` (which must have the target
// size).
SemanticMap ApplyPca(const FeatureMap& features, const PcaTransform& transform,
                     const Mask& mask, int target_width, int target_height);

// "RPF1" container: magic, u32 width, u32 height, u32 channels, u32 patch,
// then width*height*channels f32, all little-endian.
FeatureMap ReadFeatures(std::istream& in);
FeatureMap LoadFeatures(const std::filesystem::path& path);
void WriteFeatures(const FeatureMap& features, std::ostream& out);
void SaveFeatures(const FeatureMap& features, const std::filesystem::path& path);

}  // namespace rcpose
