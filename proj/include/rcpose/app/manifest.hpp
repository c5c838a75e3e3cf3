#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcpose/camera.hpp"
#include "rcpose/estimator.hpp"
#include "rcpose/rotations.hpp"

namespace rcpose::app {

struct FrameEntry {
  std::string id;
  std::filesystem::path rgb;
  std::optional<std::filesystem::path> depth;
  std::filesystem::path mask;
  std::optional<std::filesystem::path> features;
  std::optional<Rotation> rotation;  // absolute ground truth
};

struct ObjectEntry {
  std::string name;
  CameraIntrinsics intrinsics;
  double depth_scale = 1.0;
  std::vector<FrameEntry> frames;
};

// Paths in a loaded manifest are resolved against `root`.
struct Manifest {
  std::filesystem::path root;
  std::vector<ObjectEntry> objects;
};

// Parses and validates: intrinsics, unique frame ids per object, and the
// existence of every referenced file (IoError names the first missing one).
Manifest LoadManifest(const std::filesystem::path& path);
Manifest ParseManifest(const nlohmann::json& json, const std::filesystem::path& root);
// Writes paths as given (relative paths stay relative to the manifest).
void SaveManifest(const Manifest& manifest, const std::filesystem::path& path);

nlohmann::ordered_json IntrinsicsToJson(const CameraIntrinsics& k, double depth_scale);
// Row-major 3x3 as a flat array of 9 numbers.
nlohmann::ordered_json RotationToJson(const Rotation& r);
// Accepts a flat 9-array, a 3x3 nested array, {"matrix": ...} or
// {"quaternion": [w, x, y, z]}.
Rotation RotationFromJson(const nlohmann::json& json);

nlohmann::json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const nlohmann::ordered_json& json, const std::filesystem::path& path);

void RequireFile(const std::filesystem::path& path, const std::string& what);

// Reads a frame's images. The reference needs a depth map.
ReferenceView LoadReference(const FrameEntry& frame, const ObjectEntry& object);
QueryView LoadQuery(const FrameEntry& frame, const ObjectEntry& object);

}  // namespace rcpose::app
