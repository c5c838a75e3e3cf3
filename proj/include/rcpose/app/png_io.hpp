#pragma once

#include <filesystem>

#include "rcpose/camera.hpp"
#include "rcpose/image.hpp"

namespace rcpose::app {

// 8-bit RGB (grey/palette/alpha inputs are converted) to [0, 1] floats.
ImageF LoadRgb(const std::filesystem::path& path);
// Any non-zero sample is "on".
Mask LoadMask(const std::filesystem::path& path);
// 16-bit greyscale; metres = value * depth_scale / 1000.
DepthMap LoadDepth(const std::filesystem::path& path, double depth_scale);

void SaveRgb(const ImageF& image, const std::filesystem::path& path);
void SaveMask(const Mask& mask, const std::filesystem::path& path);
// Rounds metres to the nearest depth unit; throws if a value overflows 16 bits.
void SaveDepth(const DepthMap& depth, double depth_scale, const std::filesystem::path& path);

}  // namespace rcpose::app
