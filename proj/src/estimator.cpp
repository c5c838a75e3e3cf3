#include "rcpose/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rcpose/errors.hpp"

namespace rcpose {

void RefinementConfig::Validate() const {
  auto fail = [](const std::string& what) { throw ConfigurationError("config: " + what); };
  if (lattice.viewpoints < 1 || lattice.inplane < 1) fail("lattice counts must be positive");
  if (iterations < 0) fail("iterations must be >= 0");
  if (!(step_size > 0.0)) fail("step size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("Adam decay rates must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(plateau.factor > 0.0 && plateau.factor < 1.0)) fail("plateau factor must lie in (0, 1)");
  if (plateau.patience < 0) fail("plateau patience must be >= 0");
  if (!(plateau.min_step > 0.0)) fail("plateau min step must be positive");
  if (!(fd_step > 0.0 && fd_step < 0.1)) fail("finite-difference step must lie in (0, 0.1)");
  if (crop_resolution < 11) fail("crop resolution must be at least 11");
  if (!(crop_margin >= 0.0)) fail("crop margin must be >= 0");
  if (top_k < 1) fail("top_k must be positive");
  if (workers < 0) fail("workers must be >= 0");
}

RenderCompareObjective::RenderCompareObjective(const TexturedMesh& mesh,
                                               const CameraIntrinsics& source,
                                               const PoseLoss& loss, int resolution,
                                               double margin, bool cull)
    : mesh_(mesh), source_(source), loss_(loss), resolution_(resolution),
      margin_(margin), cull_(cull) {
  if (mesh.empty()) throw InvalidArgument("objective: empty mesh");
  source.ValidateProjection();
  if (loss.width() != resolution || loss.height() != resolution) {
    throw InvalidArgument("objective: query crop does not match the crop resolution");
  }
}

namespace {

std::optional<RenderCamera> Framing(const TexturedMesh& mesh, const PosedGeometry& posed,
                                    const CameraIntrinsics& source, int resolution,
                                    double margin) {
  const auto bounds = ProjectedBounds(mesh, posed, source);
  if (!bounds) return std::nullopt;
  const double extent =
      std::max(bounds->x_max - bounds->x_min, bounds->y_max - bounds->y_min);
  if (!(extent > 1e-9)) return std::nullopt;
  const CropWindow window =
      SquareWindow(bounds->x_min, bounds->y_min, bounds->x_max, bounds->y_max, margin);
  return RenderCamera{CropIntrinsics(source, window, resolution)};
}

}  // namespace

std::optional<RenderCamera> RenderCompareObjective::FramingCamera(const Rotation& pose) const {
  return Framing(mesh_, PoseMesh(mesh_, pose, cull_), source_, resolution_, margin_);
}

RenderOutput RenderCompareObjective::RenderAt(const Rotation& pose) const {
  const PosedGeometry posed = PoseMesh(mesh_, pose, cull_);
  RenderOutput out;
  if (const auto camera = Framing(mesh_, posed, source_, resolution_, margin_)) {
    Rasterize(mesh_, posed, *camera, out);
  } else {
    out.Reset(resolution_, resolution_);
  }
  return out;
}

RenderCompareObjective::Evaluation RenderCompareObjective::Evaluate(
    const Rotation& pose) const {
  const RenderOutput render = RenderAt(pose);
  return {loss_(render), render.covered_pixels()};
}

namespace {

bool RanksBefore(const PoseCandidate& a, const PoseCandidate& b) {
  if (a.loss.total != b.loss.total) return a.loss.total < b.loss.total;
  return a.index < b.index;
}

}  // namespace

InitializationResult Initialize(const RenderCompareObjective& objective,
                                const RefinementConfig& config) {
  const std::vector<Rotation> poses = CandidatePoses(config.lattice);
  std::vector<RenderCompareObjective::Evaluation> scores(poses.size());
  ParallelFor(poses.size(), config.workers,
              [&](std::size_t i) { scores[i] = objective.Evaluate(poses[i]); });

  const bool any_visible = std::any_of(scores.begin(), scores.end(),
                                       [](const auto& s) { return s.covered > 0; });
  if (!any_visible) throw DegenerateError("no candidate pose renders any pixel");

  std::vector<PoseCandidate> candidates(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (!std::isfinite(scores[i].loss.total)) {
      throw InvalidArgument("candidate " + std::to_string(i) + " has a non-finite loss");
    }
    candidates[i] = {static_cast<int>(i), poses[i], scores[i].loss};
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config.top_k),
                                              candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), RanksBefore);
  InitializationResult result;
  result.best = candidates.front();
  result.ranking.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k));
  result.evaluated = static_cast<int>(poses.size());
  return result;
}

Eigen::Vector3d FdGradient(const RenderCompareObjective& objective, const Rotation& pose,
                           double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("FdGradient: step must be positive");
  Eigen::Vector3d g;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d delta = Eigen::Vector3d::Unit(i) * eps;
    const double plus = objective.Evaluate(LocalRetract(pose, delta)).loss.total;
    const double minus = objective.Evaluate(LocalRetract(pose, -delta)).loss.total;
    if (!std::isfinite(plus)) throw NonFiniteGradientError(2 * i, "non-finite loss at +probe");
    if (!std::isfinite(minus)) {
      throw NonFiniteGradientError(2 * i + 1, "non-finite loss at -probe");
    }
    g[i] = (plus - minus) / (2.0 * eps);
  }
  return g;
}

RefinementResult Refine(const RenderCompareObjective& objective, const Rotation& start,
                        const RefinementConfig& config) {
  RefinementResult result;
  Rotation pose = start;
  Eigen::Vector3d first_moment = Eigen::Vector3d::Zero();
  Eigen::Vector3d second_moment = Eigen::Vector3d::Zero();
  double step = config.step_size;
  double plateau_best = std::numeric_limits<double>::infinity();
  int bad_iterations = 0;
  double best_total = std::numeric_limits<double>::infinity();

  auto keep = [&](const IterationRecord& record) {
    result.iterations.push_back(record);
    if (record.loss.total < best_total) {
      best_total = record.loss.total;
      result.rotation = record.rotation;
      result.loss = record.loss;
      result.best_iteration = record.iteration;
    }
  };

  for (int it = 0; it < config.iterations; ++it) {
    const LossBreakdown loss = objective.Evaluate(pose).loss;
    const Eigen::Vector3d g = FdGradient(objective, pose, config.fd_step);
    keep({it, pose, loss, step, g.norm()});

    const int t = it + 1;
    first_moment = config.beta1 * first_moment + (1.0 - config.beta1) * g;
    second_moment =
        config.beta2 * second_moment + (1.0 - config.beta2) * g.cwiseProduct(g);
    const Eigen::Vector3d m_hat = first_moment / (1.0 - std::pow(config.beta1, t));
    const Eigen::Vector3d v_hat = second_moment / (1.0 - std::pow(config.beta2, t));
    const Eigen::Vector3d update =
        -step * m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + config.epsilon).matrix());
    pose = LocalRetract(pose, update);

    if (loss.total < plateau_best - config.plateau.threshold) {
      plateau_best = loss.total;
      bad_iterations = 0;
    } else if (++bad_iterations > config.plateau.patience) {
      step = std::max(step * config.plateau.factor, config.plateau.min_step);
      bad_iterations = 0;
    }
  }
  keep({config.iterations, pose, objective.Evaluate(pose).loss, step, 0.0});
  return result;
}

namespace {

template <typename Fn>
auto RunStage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

}  // namespace

PreparedPair::PreparedPair(const ReferenceView& reference, const QueryView& query,
                           const RefinementConfig& config) {
  const bool use_semantics = config.mode != LossMode::kRgbOnly;

  std::optional<SemanticMap> reference_semantic;
  std::optional<SemanticMap> query_semantic;
  if (use_semantics) {
    RunStage("semantics", [&] {
      if (!reference.features || !query.features) {
        throw ConfigurationError(std::string("loss mode ") + ToString(config.mode) +
                                 " needs reference and query feature maps");
      }
      const PcaTransform pca = FitPca(*reference.features, reference.mask);
      reference_semantic = ApplyPca(*reference.features, pca, reference.mask,
                                    reference.rgb.width(), reference.rgb.height());
      query_semantic =
          ApplyPca(*query.features, pca, query.mask, query.rgb.width(), query.rgb.height());
      return 0;
    });
  }

  mesh_ = RunStage("mesh", [&] {
    reference.intrinsics.Validate();
    const PointCloud cloud = Backproject(reference.depth, reference.intrinsics, reference.mask);
    return BuildMesh(cloud, reference.rgb,
                     reference_semantic ? &*reference_semantic : nullptr);
  });

  struct QueryCrop {
    NormalizedCrop rgb;
    std::optional<ImageF> semantic;
  };
  const QueryCrop crop = RunStage("crop", [&] {
    QueryCrop c{NormalizeCrop(query.rgb, query.mask, query.intrinsics,
                              config.crop_resolution, config.crop_margin),
                std::nullopt};
    if (query_semantic) {
      c.semantic = ResampleCrop(query_semantic->values, c.rgb.window, config.crop_resolution);
    }
    return c;
  });

  RunStage("loss", [&] {
    loss_.emplace(crop.rgb.image, crop.semantic ? &*crop.semantic : nullptr, crop.rgb.mask,
                  config.mode);
    objective_.emplace(mesh_, reference.intrinsics, *loss_, config.crop_resolution,
                       config.crop_margin, config.cull);
    return 0;
  });
}

EstimateResult Estimate(const ReferenceView& reference, const QueryView& query,
                        const RefinementConfig& config) {
  RunStage("config", [&] {
    config.Validate();
    return 0;
  });
  const PreparedPair pair(reference, query, config);
  const RenderCompareObjective& objective = pair.objective();

  const InitializationResult init =
      RunStage("initialize", [&] { return Initialize(objective, config); });

  EstimateResult result;
  result.initial = init.best.rotation;
  result.initial_loss = init.best.loss;
  result.trace.initial_ranking = init.ranking;
  result.trace.candidates_evaluated = init.evaluated;
  if (config.init_only) {
    result.rotation = init.best.rotation;
    result.loss = init.best.loss;
    return result;
  }
  const RefinementResult refined =
      RunStage("refine", [&] { return Refine(objective, init.best.rotation, config); });
  result.rotation = refined.rotation;
  result.loss = refined.loss;
  result.trace.iterations = refined.iterations;
  result.trace.best_iteration = refined.best_iteration;
  return result;
}

}  // namespace rcpose
