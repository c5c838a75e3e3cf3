#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rcpose/app/commands.hpp"

namespace {

using rcpose::app::ConfigArgs;
using rcpose::app::PairSource;

struct ConfigFlags {
  std::string config;
  int iterations = -1;
  std::string lattice;
  int crop = -1;
  double fd_eps = -1.0;
  int workers = -1;
  std::string mode;
  bool no_culling = false;
  bool init_only = false;
};

void AddConfigFlags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file (default: $RCPOSE_CONFIG)");
  cmd->add_option("--iterations", f.iterations, "refinement iterations N");
  cmd->add_option("--lattice", f.lattice, "candidate lattice as m,n");
  cmd->add_option("--crop", f.crop, "crop resolution in pixels");
  cmd->add_option("--fd-eps", f.fd_eps, "finite-difference probe (radians)");
  cmd->add_option("--workers", f.workers, "worker threads (0 = all cores)");
  cmd->add_option("--mode", f.mode, "loss mode: rgb+sem | rgb-only | sem-only");
  cmd->add_flag("--no-culling", f.no_culling, "disable back-surface culling");
  cmd->add_flag("--init-only", f.init_only, "skip refinement");
}

ConfigArgs ToConfigArgs(const ConfigFlags& f) {
  ConfigArgs a;
  if (!f.config.empty()) a.config = f.config;
  auto& o = a.overrides;
  if (f.iterations >= 0) o.iterations = f.iterations;
  if (!f.lattice.empty()) o.lattice = rcpose::app::ParseLattice(f.lattice);
  if (f.crop >= 0) o.crop_resolution = f.crop;
  if (f.fd_eps >= 0.0) o.fd_step = f.fd_eps;
  if (f.workers >= 0) o.workers = f.workers;
  if (!f.mode.empty()) o.mode = rcpose::ParseLossMode(f.mode);
  o.no_culling = f.no_culling;
  o.init_only = f.init_only;
  return a;
}

struct SourceFlags {
  std::string manifest, object, reference, query, intrinsics;
  std::string ref_rgb, ref_depth, ref_mask, ref_features;
  std::string query_rgb, query_mask, query_features;
};

void AddSourceFlags(CLI::App* cmd, SourceFlags& s, bool with_query) {
  cmd->add_option("--manifest", s.manifest, "dataset manifest JSON");
  cmd->add_option("--object", s.object, "object name in the manifest");
  cmd->add_option("--reference", s.reference, "reference frame id");
  cmd->add_option("--intrinsics", s.intrinsics, "intrinsics JSON (with explicit files)");
  cmd->add_option("--ref-rgb", s.ref_rgb);
  cmd->add_option("--ref-depth", s.ref_depth);
  cmd->add_option("--ref-mask", s.ref_mask);
  cmd->add_option("--ref-features", s.ref_features);
  if (with_query) {
    cmd->add_option("--query", s.query, "query frame id");
    cmd->add_option("--query-rgb", s.query_rgb);
    cmd->add_option("--query-mask", s.query_mask);
    cmd->add_option("--query-features", s.query_features);
  }
}

PairSource ToSource(const SourceFlags& s) {
  PairSource p;
  if (!s.manifest.empty()) p.manifest = s.manifest;
  if (!s.object.empty()) p.object = s.object;
  p.reference_id = s.reference;
  p.query_id = s.query;
  if (!s.intrinsics.empty()) p.intrinsics = s.intrinsics;
  p.ref_rgb = s.ref_rgb;
  p.ref_depth = s.ref_depth;
  p.ref_mask = s.ref_mask;
  if (!s.ref_features.empty()) p.ref_features = s.ref_features;
  p.query_rgb = s.query_rgb;
  p.query_mask = s.query_mask;
  if (!s.query_features.empty()) p.query_features = s.query_features;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free relative rotation estimation by render-and-compare"};
  app.require_subcommand(1);

  ConfigFlags est_cfg;
  SourceFlags est_src;
  std::string trace = "trace.json";
  auto* estimate = app.add_subcommand("estimate", "estimate the rotation of one pair");
  AddSourceFlags(estimate, est_src, true);
  AddConfigFlags(estimate, est_cfg);
  estimate->add_option("--trace", trace, "trace JSON output");

  ConfigFlags eval_cfg;
  rcpose::app::EvaluateArgs eval_args;
  std::string eval_manifest, eval_out = "report";
  auto* evaluate = app.add_subcommand("evaluate", "score sampled pairs of a manifest");
  evaluate->add_option("--manifest", eval_manifest, "dataset manifest JSON")->required();
  evaluate->add_option("--pairs", eval_args.pairs, "pairs per object");
  evaluate->add_option("--seed", eval_args.seed, "pair sampling seed");
  evaluate->add_option("--max-overlap", eval_args.max_overlap_deg,
                       "in-plane omitted distance bound (degrees)");
  evaluate->add_option("--out", eval_out, "report directory");
  AddConfigFlags(evaluate, eval_cfg);

  rcpose::app::SynthArgs synth_args;
  std::string synth_out;
  bool no_semantics = false;
  auto* synth = app.add_subcommand("synth", "write a synthetic scene");
  synth->add_option("--seed", synth_args.seed);
  synth->add_option("--min-angle", synth_args.min_angle_deg, "degrees");
  synth->add_option("--max-angle", synth_args.max_angle_deg, "degrees");
  synth->add_option("--count", synth_args.count, "scenes; >1 writes a combined manifest");
  synth->add_option("--size", synth_args.image_size, "image side in pixels");
  synth->add_flag("--no-semantics", no_semantics, "skip feature files");
  synth->add_option("--out", synth_out, "output directory")->required();

  SourceFlags mesh_src;
  rcpose::app::ExportMeshArgs mesh_args;
  std::string mesh_out = "mesh.ply";
  auto* export_mesh = app.add_subcommand("export-mesh", "write the reference mesh as PLY");
  AddSourceFlags(export_mesh, mesh_src, false);
  export_mesh->add_flag("--semantics", mesh_args.with_semantics, "attach PCA semantics");
  export_mesh->add_option("--out", mesh_out, "PLY output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*estimate) {
      rcpose::app::EstimateArgs args;
      args.source = ToSource(est_src);
      args.config = ToConfigArgs(est_cfg);
      args.trace = trace;
      return rcpose::app::CmdEstimate(args, std::cout, std::cerr);
    }
    if (*evaluate) {
      eval_args.manifest = eval_manifest;
      eval_args.out = eval_out;
      eval_args.config = ToConfigArgs(eval_cfg);
      return rcpose::app::CmdEvaluate(eval_args, std::cout, std::cerr);
    }
    if (*synth) {
      synth_args.out = synth_out;
      synth_args.semantics = !no_semantics;
      return rcpose::app::CmdSynth(synth_args, std::cout, std::cerr);
    }
    mesh_args.source = ToSource(mesh_src);
    mesh_args.out = mesh_out;
    return rcpose::app::CmdExportMesh(mesh_args, std::cout, std::cerr);
  } catch (const rcpose::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rcpose::app::ExitCodeFor(e.kind());
  }
}
