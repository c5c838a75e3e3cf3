#include "rcpose/app/manifest.hpp"

#include <fstream>
#include <set>

#include "rcpose/app/png_io.hpp"
#include "rcpose/errors.hpp"

namespace rcpose::app {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T Required(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(0, where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(0, where + ": field '" + key + "': " + e.what());
  }
}

fs::path Resolve(const fs::path& root, const fs::path& p) {
  return p.is_absolute() ? p : root / p;
}

}  // namespace

void RequireFile(const fs::path& path, const std::string& what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw IoError(path.string(), "missing " + what);
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(e.byte, path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const ordered_json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot write");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

ordered_json IntrinsicsToJson(const CameraIntrinsics& k, double depth_scale) {
  return ordered_json{{"fx", k.fx},         {"fy", k.fy},
                      {"cx", k.cx},         {"cy", k.cy},
                      {"width", k.width},   {"height", k.height},
                      {"depth_scale", depth_scale}};
}

ordered_json RotationToJson(const Rotation& r) {
  const auto m = r.RowMajor();
  return ordered_json(std::vector<double>(m.begin(), m.end()));
}

Rotation RotationFromJson(const json& j) {
  try {
    if (j.is_object() && j.contains("quaternion")) {
      const auto q = j.at("quaternion").get<std::vector<double>>();
      if (q.size() != 4) throw FormatError(0, "quaternion needs 4 values [w, x, y, z]");
      return Rotation::FromQuaternion(q[0], q[1], q[2], q[3]);
    }
    const json& m = j.is_object() && j.contains("matrix") ? j.at("matrix") : j;
    std::vector<double> flat;
    if (m.is_array() && m.size() == 3 && m[0].is_array()) {
      for (const auto& row : m) {
        const auto r = row.get<std::vector<double>>();
        if (r.size() != 3) throw FormatError(0, "rotation matrix rows need 3 values");
        flat.insert(flat.end(), r.begin(), r.end());
      }
    } else {
      flat = m.get<std::vector<double>>();
    }
    if (flat.size() != 9) throw FormatError(0, "rotation matrix needs 9 values");
    Eigen::Matrix3d mat;
    for (int i = 0; i < 9; ++i) mat(i / 3, i % 3) = flat[i];
    if (!mat.allFinite() || (mat.transpose() * mat - Eigen::Matrix3d::Identity()).norm() > 1e-4 ||
        mat.determinant() < 0.0) {
      throw FormatError(0, "rotation matrix is not orthonormal with det +1");
    }
    return Rotation::FromMatrix(mat);
  } catch (const json::exception& e) {
    throw FormatError(0, std::string("rotation: ") + e.what());
  }
}

Manifest ParseManifest(const json& j, const fs::path& root) {
  Manifest manifest;
  manifest.root = j.contains("root") ? Resolve(root, j.at("root").get<std::string>()) : root;
  if (!j.contains("objects") || !j.at("objects").is_array()) {
    throw FormatError(0, "manifest: missing 'objects' array");
  }
  for (const auto& jo : j.at("objects")) {
    ObjectEntry object;
    object.name = Required<std::string>(jo, "name", "object");
    const std::string where = "object '" + object.name + "'";
    if (!jo.contains("intrinsics")) throw FormatError(0, where + ": missing intrinsics");
    const json& ji = jo.at("intrinsics");
    object.intrinsics.fx = Required<double>(ji, "fx", where);
    object.intrinsics.fy = Required<double>(ji, "fy", where);
    object.intrinsics.cx = Required<double>(ji, "cx", where);
    object.intrinsics.cy = Required<double>(ji, "cy", where);
    object.intrinsics.width = Required<int>(ji, "width", where);
    object.intrinsics.height = Required<int>(ji, "height", where);
    object.depth_scale = ji.value("depth_scale", 1.0);
    try {
      object.intrinsics.Validate();
    } catch (const Error& e) {
      throw ConfigurationError(where + ": " + e.what());
    }
    if (!(object.depth_scale > 0.0)) throw ConfigurationError(where + ": depth_scale must be positive");

    std::set<std::string> ids;
    for (const auto& jf : jo.value("frames", json::array())) {
      FrameEntry frame;
      frame.id = Required<std::string>(jf, "id", where + " frame");
      if (!ids.insert(frame.id).second) {
        throw ConfigurationError(where + ": duplicate frame id '" + frame.id + "'");
      }
      const std::string fwhere = where + " frame '" + frame.id + "'";
      frame.rgb = Resolve(manifest.root, Required<std::string>(jf, "rgb", fwhere));
      frame.mask = Resolve(manifest.root, Required<std::string>(jf, "mask", fwhere));
      if (jf.contains("depth") && !jf.at("depth").is_null()) {
        frame.depth = Resolve(manifest.root, jf.at("depth").get<std::string>());
      }
      if (jf.contains("features") && !jf.at("features").is_null()) {
        frame.features = Resolve(manifest.root, jf.at("features").get<std::string>());
      }
      if (jf.contains("rotation") && !jf.at("rotation").is_null()) {
        frame.rotation = RotationFromJson(jf.at("rotation"));
      }
      object.frames.push_back(std::move(frame));
    }
    manifest.objects.push_back(std::move(object));
  }
  for (const auto& object : manifest.objects) {
    for (const auto& frame : object.frames) {
      RequireFile(frame.rgb, "rgb file");
      RequireFile(frame.mask, "mask file");
      if (frame.depth) RequireFile(*frame.depth, "depth file");
      if (frame.features) RequireFile(*frame.features, "feature file");
    }
  }
  return manifest;
}

Manifest LoadManifest(const fs::path& path) {
  RequireFile(path, "manifest");
  return ParseManifest(ReadJsonFile(path), path.parent_path());
}

void SaveManifest(const Manifest& manifest, const fs::path& path) {
  ordered_json j;
  ordered_json objects = ordered_json::array();
  for (const auto& object : manifest.objects) {
    ordered_json jo;
    jo["name"] = object.name;
    jo["intrinsics"] = IntrinsicsToJson(object.intrinsics, object.depth_scale);
    ordered_json frames = ordered_json::array();
    for (const auto& frame : object.frames) {
      ordered_json jf;
      jf["id"] = frame.id;
      jf["rgb"] = frame.rgb.generic_string();
      if (frame.depth) jf["depth"] = frame.depth->generic_string();
      jf["mask"] = frame.mask.generic_string();
      if (frame.features) jf["features"] = frame.features->generic_string();
      if (frame.rotation) jf["rotation"] = RotationToJson(*frame.rotation);
      frames.push_back(std::move(jf));
    }
    jo["frames"] = std::move(frames);
    objects.push_back(std::move(jo));
  }
  j["objects"] = std::move(objects);
  WriteJsonFile(j, path);
}

ReferenceView LoadReference(const FrameEntry& frame, const ObjectEntry& object) {
  if (!frame.depth) {
    throw ConfigurationError("frame '" + frame.id + "' has no depth map and cannot be a reference");
  }
  ReferenceView view;
  view.intrinsics = object.intrinsics;
  view.rgb = LoadRgb(frame.rgb);
  view.depth = LoadDepth(*frame.depth, object.depth_scale);
  view.mask = LoadMask(frame.mask);
  if (frame.features) view.features = LoadFeatures(*frame.features);
  return view;
}

QueryView LoadQuery(const FrameEntry& frame, const ObjectEntry& object) {
  QueryView view;
  view.intrinsics = object.intrinsics;
  view.rgb = LoadRgb(frame.rgb);
  view.mask = LoadMask(frame.mask);
  if (frame.features) view.features = LoadFeatures(*frame.features);
  return view;
}

}  // namespace rcpose::app
