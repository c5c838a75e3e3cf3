#include "rcpose/app/commands.hpp"

#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rcpose/app/manifest.hpp"
#include "rcpose/app/png_io.hpp"
#include "rcpose/app/synth.hpp"
#include "rcpose/estimator.hpp"
#include "rcpose/evaluation.hpp"

namespace rcpose::app {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kConfiguration:
      return 1;
    case ErrorKind::kIo:
    case ErrorKind::kFormat:
      return 2;
    case ErrorKind::kDegenerate:
      return 3;
    case ErrorKind::kNumeric:
      return 4;
  }
  return 4;
}

namespace {

template <typename Fn>
int Guard(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 4;
  }
}

ordered_json LossToJson(const LossBreakdown& l) {
  return {{"rgb", l.rgb}, {"semantic", l.semantic}, {"total", l.total}};
}

ordered_json QuaternionToJson(const Rotation& r) {
  const auto& q = r.quaternion();
  return ordered_json::array({q.w(), q.x(), q.y(), q.z()});
}

const ObjectEntry& PickObject(const Manifest& manifest, const std::optional<std::string>& name) {
  if (!name) {
    if (manifest.objects.size() != 1) {
      throw ConfigurationError("manifest has several objects; pass --object");
    }
    return manifest.objects.front();
  }
  for (const auto& o : manifest.objects) {
    if (o.name == *name) return o;
  }
  throw ConfigurationError("no object named '" + *name + "' in manifest");
}

const FrameEntry& PickFrame(const ObjectEntry& object, const std::string& id) {
  for (const auto& f : object.frames) {
    if (f.id == id) return f;
  }
  throw ConfigurationError("no frame '" + id + "' in object '" + object.name + "'");
}

struct LoadedPair {
  ReferenceView reference;
  std::optional<QueryView> query;
  std::optional<Rotation> ground_truth;
  std::string label;
};

ObjectEntry ObjectFromFiles(const PairSource& s, bool need_query) {
  if (!s.intrinsics) throw ConfigurationError("pass --manifest or --intrinsics with explicit files");
  if (s.ref_rgb.empty() || s.ref_depth.empty() || s.ref_mask.empty()) {
    throw ConfigurationError("reference needs --ref-rgb, --ref-depth and --ref-mask");
  }
  if (need_query && (s.query_rgb.empty() || s.query_mask.empty())) {
    throw ConfigurationError("query needs --query-rgb and --query-mask");
  }
  RequireFile(*s.intrinsics, "intrinsics file");
  json k = ReadJsonFile(*s.intrinsics);
  // scene.json style files nest the block
  if (k.is_object() && k.contains("intrinsics")) k = k["intrinsics"];
  json manifest_json = {{"objects", json::array({json{{"name", "cli"},
                                                      {"intrinsics", k},
                                                      {"frames", json::array()}}})}};
  auto frame = [](const std::string& id, const fs::path& rgb, const fs::path* depth,
                  const fs::path& mask, const std::optional<fs::path>& features) {
    json f{{"id", id}, {"rgb", rgb.string()}, {"mask", mask.string()}};
    if (depth) f["depth"] = depth->string();
    if (features) f["features"] = features->string();
    return f;
  };
  auto& frames = manifest_json["objects"][0]["frames"];
  frames.push_back(frame("reference", s.ref_rgb, &s.ref_depth, s.ref_mask, s.ref_features));
  if (need_query) {
    frames.push_back(frame("query", s.query_rgb, nullptr, s.query_mask, s.query_features));
  }
  return ParseManifest(manifest_json, fs::current_path()).objects.front();
}

LoadedPair LoadPair(const PairSource& s, bool need_query) {
  ObjectEntry object;
  std::string ref_id = "reference";
  std::string query_id = "query";
  if (s.manifest) {
    const Manifest manifest = LoadManifest(*s.manifest);
    object = PickObject(manifest, s.object);
    if (s.reference_id.empty() || (need_query && s.query_id.empty())) {
      throw ConfigurationError("with --manifest pass --reference and --query frame ids");
    }
    ref_id = s.reference_id;
    query_id = s.query_id;
  } else {
    object = ObjectFromFiles(s, need_query);
  }
  const FrameEntry& ref = PickFrame(object, ref_id);
  LoadedPair pair;
  pair.label = object.name + ":" + ref_id;
  pair.reference = LoadReference(ref, object);
  if (need_query) {
    const FrameEntry& query = PickFrame(object, query_id);
    pair.query = LoadQuery(query, object);
    pair.label += "->" + query_id;
    if (ref.rotation && query.rotation) pair.ground_truth = *query.rotation * ref.rotation->inverse();
  }
  return pair;
}

ordered_json TraceToJson(const EstimateResult& r, const RefinementConfig& config) {
  ordered_json j;
  j["config"] = ConfigToJson(config);
  ordered_json ranking = ordered_json::array();
  for (const auto& c : r.trace.initial_ranking) {
    ranking.push_back({{"candidate", c.index},
                       {"rotation", RotationToJson(c.rotation)},
                       {"loss", LossToJson(c.loss)}});
  }
  j["candidates_evaluated"] = r.trace.candidates_evaluated;
  j["initial_ranking"] = std::move(ranking);
  ordered_json iterations = ordered_json::array();
  for (const auto& it : r.trace.iterations) {
    iterations.push_back({{"iteration", it.iteration},
                          {"rotation", RotationToJson(it.rotation)},
                          {"loss", LossToJson(it.loss)},
                          {"step_size", it.step_size},
                          {"gradient_norm", it.gradient_norm}});
  }
  j["iterations"] = std::move(iterations);
  j["best_iteration"] = r.trace.best_iteration;
  j["initial"] = {{"rotation", RotationToJson(r.initial)}, {"loss", LossToJson(r.initial_loss)}};
  j["result"] = {{"rotation", RotationToJson(r.rotation)},
                 {"quaternion", QuaternionToJson(r.rotation)},
                 {"loss", LossToJson(r.loss)}};
  return j;
}

std::string Label(const RefinementConfig& c) {
  std::string label = ToString(c.mode);
  if (!c.cull) label += " no-culling";
  if (c.init_only) label += " init-only";
  return label;
}

}  // namespace

int CmdEstimate(const EstimateArgs& args, std::ostream& out, std::ostream& err) {
  return Guard(err, [&] {
    const RefinementConfig config = ResolveConfig(args.config.config, args.config.overrides);
    const LoadedPair pair = LoadPair(args.source, true);
    const EstimateResult result = Estimate(pair.reference, *pair.query, config);

    ordered_json trace = TraceToJson(result, config);
    if (pair.ground_truth) {
      trace["ground_truth"] = RotationToJson(*pair.ground_truth);
      trace["error_deg"] = RadToDeg(GeodesicDistance(*pair.ground_truth, result.rotation));
    }
    WriteJsonFile(trace, args.trace);

    const auto m = result.rotation.RowMajor();
    fmt::print(out, "rotation: {:.9f}\n", fmt::join(m, " "));
    const auto& q = result.rotation.quaternion();
    fmt::print(out, "quaternion: {:.9f} {:.9f} {:.9f} {:.9f}\n", q.w(), q.x(), q.y(), q.z());
    fmt::print(out, "loss: {:.6f} (initial {:.6f})\n", result.loss.total, result.initial_loss.total);
    if (pair.ground_truth) {
      fmt::print(out, "error_deg: {:.4f} (initial {:.4f})\n",
                 RadToDeg(GeodesicDistance(*pair.ground_truth, result.rotation)),
                 RadToDeg(GeodesicDistance(*pair.ground_truth, result.initial)));
    }
    if (config.init_only) {
      fmt::print(out, "{:>4} {:>9} {:>10} {:>10} {:>10}\n", "rank", "candidate", "total", "rgb",
                 "semantic");
      for (std::size_t i = 0; i < result.trace.initial_ranking.size(); ++i) {
        const auto& c = result.trace.initial_ranking[i];
        fmt::print(out, "{:>4} {:>9} {:>10.6f} {:>10.6f} {:>10.6f}\n", i + 1, c.index,
                   c.loss.total, c.loss.rgb, c.loss.semantic);
      }
    }
    fmt::print(out, "trace: {}\n", args.trace.string());
    return 0;
  });
}

int CmdEvaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  return Guard(err, [&] {
    const RefinementConfig config = ResolveConfig(args.config.config, args.config.overrides);
    const Manifest manifest = LoadManifest(args.manifest);
    if (args.pairs == 0) throw ConfigurationError("--pairs must be positive");

    struct Job {
      const ObjectEntry* object;
      const FrameEntry* reference;
      const FrameEntry* query;
      PairRecord record;
    };
    std::vector<Job> jobs;
    ordered_json sampling = ordered_json::array();
    for (std::size_t oi = 0; oi < manifest.objects.size(); ++oi) {
      const ObjectEntry& object = manifest.objects[oi];
      std::vector<PosedFrame> refs;
      std::vector<PosedFrame> queries;
      for (const auto& f : object.frames) {
        if (!f.rotation) continue;
        queries.push_back({f.id, *f.rotation});
        if (f.depth) refs.push_back({f.id, *f.rotation});
      }
      PairSamplingInfo info;
      const std::uint64_t seed = args.seed + 0x9e3779b97f4a7c15ULL * oi;
      std::vector<PairRecord> pairs =
          GeneratePairs(refs, queries, args.pairs, seed, args.max_overlap_deg, &info);
      sampling.push_back({{"object", object.name},
                          {"pairs", pairs.size()},
                          {"with_replacement", info.with_replacement},
                          {"qualifying_pairs", info.qualifying_pairs}});
      for (auto& p : pairs) {
        Job job{&object, &PickFrame(object, p.reference_id), &PickFrame(object, p.query_id),
                std::move(p)};
        job.record.reference_id = object.name + "/" + job.record.reference_id;
        job.record.query_id = object.name + "/" + job.record.query_id;
        jobs.push_back(std::move(job));
      }
    }

    // Pair-level parallelism; each estimate then runs single-threaded.
    RefinementConfig inner = config;
    inner.workers = 1;
    std::mutex log_mutex;
    ParallelFor(jobs.size(), config.workers, [&](std::size_t i) {
      Job& job = jobs[i];
      try {
        const ReferenceView ref = LoadReference(*job.reference, *job.object);
        const QueryView query = LoadQuery(*job.query, *job.object);
        job.record.prediction = Estimate(ref, query, inner).rotation;
      } catch (const Error& e) {
        job.record.note = e.what();
        const std::lock_guard lock(log_mutex);
        fmt::print(err, "pair {} -> {} failed: {}\n", job.record.reference_id,
                   job.record.query_id, e.what());
      }
    });

    std::vector<PairRecord> scored;
    ordered_json failed = ordered_json::array();
    for (auto& job : jobs) {
      if (job.record.prediction) {
        scored.push_back(std::move(job.record));
      } else {
        failed.push_back({{"reference_id", job.record.reference_id},
                          {"query_id", job.record.query_id},
                          {"error", job.record.note}});
      }
    }
    if (scored.empty()) throw DegenerateError("no pair produced an estimate");
    const EvaluationReport report = Score(std::move(scored));

    std::error_code ec;
    fs::create_directories(args.out, ec);
    if (ec) throw IoError(args.out.string(), "cannot create output directory");

    ordered_json j;
    j["label"] = Label(config);
    j["manifest"] = args.manifest.string();
    j["pairs_per_object"] = args.pairs;
    j["seed"] = args.seed;
    j["max_overlap_deg"] = args.max_overlap_deg;
    j["config"] = ConfigToJson(config);
    j["sampling"] = std::move(sampling);
    ordered_json accuracy;
    for (std::size_t t = 0; t < report.thresholds_deg.size(); ++t) {
      accuracy[fmt::format("{:g}", report.thresholds_deg[t])] = report.accuracy[t];
    }
    j["summary"] = {{"scored_pairs", report.records.size()},
                    {"failed_pairs", failed.size()},
                    {"mean_error_deg", report.mean_error_deg},
                    {"median_error_deg", report.median_error_deg},
                    {"accuracy_percent", std::move(accuracy)},
                    {"histogram_bin_deg", report.histogram_bin_deg},
                    {"histogram", report.histogram}};
    j["failed"] = std::move(failed);
    ordered_json records = ordered_json::array();
    for (const auto& r : report.records) {
      records.push_back({{"reference_id", r.reference_id},
                         {"query_id", r.query_id},
                         {"ground_truth", RotationToJson(*r.ground_truth)},
                         {"prediction", RotationToJson(*r.prediction)},
                         {"error_deg", *r.error_deg}});
    }
    j["records"] = std::move(records);
    WriteJsonFile(j, args.out / "report.json");

    const fs::path csv_path = args.out / "report.csv";
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError(csv_path.string(), "cannot write");
    fmt::print(csv, "# label={} seed={} pairs_per_object={} config={}\n", Label(config), args.seed,
               args.pairs, ConfigToJson(config).dump());
    WriteReportCsv(report, csv);
    if (!csv) throw IoError(csv_path.string(), "write failed");

    PrintSummary(report, Label(config), out);
    fmt::print(out, "report: {}\n", (args.out / "report.json").string());
    return 0;
  });
}

int CmdSynth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  return Guard(err, [&] {
    if (args.out.empty()) throw ConfigurationError("--out is required");
    if (args.count < 1) throw ConfigurationError("--count must be positive");
    SynthOptions options;
    options.min_angle_deg = args.min_angle_deg;
    options.max_angle_deg = args.max_angle_deg;
    options.image_size = args.image_size;
    options.semantics = args.semantics;
    options.Validate();

    if (args.count == 1) {
      options.seed = args.seed;
      const SyntheticScene scene = GenerateScene(options);
      WriteScene(scene, options, args.out);
      fmt::print(out, "scene {} -> {} (rotation {:.3f} deg)\n", args.seed, args.out.string(),
                 RadToDeg(GeodesicDistance(Rotation(), scene.ground_truth)));
      return 0;
    }
    Manifest combined;
    for (int i = 0; i < args.count; ++i) {
      options.seed = args.seed + static_cast<std::uint64_t>(i);
      const std::string name = fmt::format("scene_{:04d}", i);
      const SyntheticScene scene = GenerateScene(options);
      WriteScene(scene, options, args.out / name);
      Manifest single = LoadManifest(args.out / name / "manifest.json");
      ObjectEntry object = single.objects.front();
      object.name = name;
      for (auto& f : object.frames) {
        auto rel = [&](const fs::path& p) { return fs::path(name) / p.filename(); };
        f.rgb = rel(f.rgb);
        f.mask = rel(f.mask);
        if (f.depth) f.depth = rel(*f.depth);
        if (f.features) f.features = rel(*f.features);
      }
      combined.objects.push_back(std::move(object));
      fmt::print(out, "scene {} -> {} (rotation {:.3f} deg)\n", options.seed,
                 (args.out / name).string(),
                 RadToDeg(GeodesicDistance(Rotation(), scene.ground_truth)));
    }
    SaveManifest(combined, args.out / "manifest.json");
    fmt::print(out, "manifest: {}\n", (args.out / "manifest.json").string());
    return 0;
  });
}

int CmdExportMesh(const ExportMeshArgs& args, std::ostream& out, std::ostream& err) {
  return Guard(err, [&] {
    const LoadedPair pair = LoadPair(args.source, false);
    const ReferenceView& ref = pair.reference;
    std::optional<SemanticMap> semantic;
    if (args.with_semantics) {
      if (!ref.features) throw ConfigurationError("--semantics needs a reference feature file");
      const PcaTransform pca = FitPca(*ref.features, ref.mask);
      semantic = ApplyPca(*ref.features, pca, ref.mask, ref.rgb.width(), ref.rgb.height());
    }
    ref.intrinsics.Validate();
    const PointCloud cloud = Backproject(ref.depth, ref.intrinsics, ref.mask);
    const TexturedMesh mesh = BuildMesh(cloud, ref.rgb, semantic ? &*semantic : nullptr);
    std::ofstream ply(args.out, std::ios::binary);
    if (!ply) throw IoError(args.out.string(), "cannot write");
    WritePly(mesh, ply);
    if (!ply) throw IoError(args.out.string(), "write failed");
    fmt::print(out, "mesh: {} vertices, {} triangles -> {}\n", mesh.vertices.size(),
               mesh.triangles.size(), args.out.string());
    return 0;
  });
}

}  // namespace rcpose::app
