#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "rcpose/camera.hpp"
#include "rcpose/crop.hpp"
#include "rcpose/losses.hpp"
#include "rcpose/mesh.hpp"
#include "rcpose/renderer.hpp"
#include "rcpose/rotations.hpp"
#include "rcpose/semantics.hpp"

namespace rcpose {

// Step-size decay when the loss stops improving (min mode, absolute threshold).
struct PlateauSchedule {
  double factor = 0.5;
  int patience = 3;
  double threshold = 1e-4;
  double min_step = 1e-4;
};

struct RefinementConfig {
  LatticeSpec lattice{200, 20};
  int iterations = 30;
  double step_size = 0.01;  // radians per Adam step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  PlateauSchedule plateau;
  double fd_step = 0.0087;  // central-difference probe, radians
  LossMode mode = LossMode::kRgbAndSemantic;
  bool cull = true;
  int crop_resolution = 224;
  double crop_margin = 0.1;
  int top_k = 10;
  bool init_only = false;
  int workers = 0;  // 0 = hardware concurrency

  // Throws ConfigurationError on out-of-range values.
  void Validate() const;
};

struct PoseCandidate {
  int index = -1;  // position in the candidate lattice, -1 if not a lattice pose
  Rotation rotation;
  LossBreakdown loss;
};

struct IterationRecord {
  int iteration = 0;
  Rotation rotation;
  LossBreakdown loss;
  double step_size = 0.0;
  double gradient_norm = 0.0;  // 0 for the closing evaluation
};

struct RefinementTrace {
  std::vector<PoseCandidate> initial_ranking;  // best first, at most top_k
  int candidates_evaluated = 0;
  std::vector<IterationRecord> iterations;  // at most N + 1 entries
  int best_iteration = 0;
};

// Loss of a hypothesised rotation of the reference mesh against a fixed
// query crop. Each render is framed like the query: the projected bounds of
// the visible geometry (under the source camera) are squared, padded by the
// crop margin and rasterized straight into the crop resolution.
class RenderCompareObjective {
 public:
  RenderCompareObjective(const TexturedMesh& mesh, const CameraIntrinsics& source,
                         const PoseLoss& loss, int resolution, double margin, bool cull);

  struct Evaluation {
    LossBreakdown loss;
    std::size_t covered = 0;
  };

  // Thread-safe; scratch buffers are per call.
  Evaluation Evaluate(const Rotation& pose) const;
  RenderOutput RenderAt(const Rotation& pose) const;
  // Crop camera framing the mesh under `pose`; nullopt when nothing is visible.
  std::optional<RenderCamera> FramingCamera(const Rotation& pose) const;

 private:
  const TexturedMesh& mesh_;
  CameraIntrinsics source_;
  const PoseLoss& loss_;
  int resolution_;
  double margin_;
  bool cull_;
};

struct InitializationResult {
  PoseCandidate best;
  std::vector<PoseCandidate> ranking;  // top-k, ascending loss, index tie-break
  int evaluated = 0;
};

// Scores every lattice candidate (no gradients) and returns the argmin,
// lowest index on ties. Throws DegenerateError when no candidate covers a
// single pixel.
InitializationResult Initialize(const RenderCompareObjective& objective,
                                const RefinementConfig& config);

// Central differences in the tangent space at `pose`:
// g_i = (L(retract(pose, +eps e_i)) - L(retract(pose, -eps e_i))) / (2 eps).
Eigen::Vector3d FdGradient(const RenderCompareObjective& objective, const Rotation& pose,
                           double eps);

struct RefinementResult {
  Rotation rotation;  // lowest-loss iterate
  LossBreakdown loss;
  std::vector<IterationRecord> iterations;
  int best_iteration = 0;
};

// N Adam steps on the tangent update with a plateau step-size schedule.
RefinementResult Refine(const RenderCompareObjective& objective, const Rotation& start,
                        const RefinementConfig& config);

struct ReferenceView {
  ImageF rgb;
  DepthMap depth;  // metres
  Mask mask;
  CameraIntrinsics intrinsics;
  std::optional<FeatureMap> features;
};

struct QueryView {
  ImageF rgb;
  Mask mask;
  CameraIntrinsics intrinsics;
  std::optional<FeatureMap> features;
};

// Semantic maps, mesh, query crop, loss and objective for one pair. The
// objective refers to the other members, so the object cannot be moved.
// Errors are rethrown as StageError naming the stage.
class PreparedPair {
 public:
  PreparedPair(const ReferenceView& reference, const QueryView& query,
               const RefinementConfig& config);
  PreparedPair(const PreparedPair&) = delete;
  PreparedPair& operator=(const PreparedPair&) = delete;

  const TexturedMesh& mesh() const noexcept { return mesh_; }
  const PoseLoss& loss() const { return *loss_; }
  const RenderCompareObjective& objective() const { return *objective_; }

 private:
  TexturedMesh mesh_;
  std::optional<PoseLoss> loss_;
  std::optional<RenderCompareObjective> objective_;
};

struct EstimateResult {
  Rotation rotation;
  Rotation initial;
  LossBreakdown loss;
  LossBreakdown initial_loss;
  RefinementTrace trace;
};

// End to end: semantic maps, mesh, query crop, initialization and (unless
// init_only) refinement. Errors are rethrown as StageError naming the stage.
EstimateResult Estimate(const ReferenceView& reference, const QueryView& query,
                        const RefinementConfig& config);

}  // namespace rcpose
