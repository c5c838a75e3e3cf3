#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "rcpose/app/config.hpp"
#include "rcpose/errors.hpp"

namespace rcpose::app {

// 1 usage/config, 2 I/O or format, 3 degenerate scene, 4 anything else.
int ExitCodeFor(ErrorKind kind);

struct ConfigArgs {
  std::optional<std::filesystem::path> config;
  ConfigOverrides overrides;
};

// A reference/query pair given either by manifest ids or by explicit files.
struct PairSource {
  std::optional<std::filesystem::path> manifest;
  std::optional<std::string> object;  // defaults to the only object
  std::string reference_id;
  std::string query_id;

  std::optional<std::filesystem::path> intrinsics;  // JSON, with depth_scale
  std::filesystem::path ref_rgb, ref_depth, ref_mask;
  std::optional<std::filesystem::path> ref_features;
  std::filesystem::path query_rgb, query_mask;
  std::optional<std::filesystem::path> query_features;
};

struct EstimateArgs {
  PairSource source;
  ConfigArgs config;
  std::filesystem::path trace = "trace.json";
};

struct EvaluateArgs {
  std::filesystem::path manifest;
  std::size_t pairs = 1000;  // per object
  std::uint64_t seed = 0;
  double max_overlap_deg = 90.0;
  std::filesystem::path out = "report";
  ConfigArgs config;
};

struct SynthArgs {
  std::uint64_t seed = 0;
  double min_angle_deg = 5.0;
  double max_angle_deg = 60.0;
  int count = 1;
  int image_size = 192;
  bool semantics = true;
  std::filesystem::path out;
};

struct ExportMeshArgs {
  PairSource source;  // reference side only
  bool with_semantics = false;
  std::filesystem::path out = "mesh.ply";
};

// Each command reports errors on `err` and returns the process exit code.
int CmdEstimate(const EstimateArgs& args, std::ostream& out, std::ostream& err);
int CmdEvaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);
int CmdSynth(const SynthArgs& args, std::ostream& out, std::ostream& err);
int CmdExportMesh(const ExportMeshArgs& args, std::ostream& out, std::ostream& err);

}  // namespace rcpose::app
