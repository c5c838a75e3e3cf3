#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rcpose/rotations.hpp"

namespace rcpose {

// Portable seeded randomness: std::mt19937_64 is bit-exact across platforms,
// and the value mappings below avoid the implementation-defined standard
// distributions.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t NextU64() { return engine_(); }
  double Uniform();                          // [0, 1), 53-bit
  double Uniform(double lo, double hi);      // [lo, hi)
  std::uint64_t Below(std::uint64_t bound);  // [0, bound), rejection sampling
  Eigen::Vector3d UnitVector();              // uniform on S^2
  Rotation UniformRotation();                // Haar-uniform on SO(3)

 private:
  std::mt19937_64 engine_;
};

struct PairRecord {
  std::string reference_id;
  std::string query_id;
  std::optional<Rotation> ground_truth;  // relative: query * reference^T
  std::optional<Rotation> prediction;
  std::optional<double> error_deg;
  std::string note;  // failure message when the estimate did not complete
};

struct PairSamplingInfo {
  bool with_replacement = false;
  std::size_t qualifying_pairs = 0;  // counted only when the pool was enumerated
};

struct PosedFrame {
  std::string id;
  Rotation rotation;  // absolute object-to-camera rotation
};

// Samples ordered (reference, query) pairs with distinct ids whose in-plane
// omitted distance is below max_overlap_deg. Without replacement when enough
// pairs qualify, with replacement otherwise. Deterministic per seed.
// Throws SamplingExhaustedError when no pair qualifies.
std::vector<PairRecord> GeneratePairs(const std::vector<PosedFrame>& references,
                                      const std::vector<PosedFrame>& queries,
                                      std::size_t count, std::uint64_t seed,
                                      double max_overlap_deg = 90.0,
                                      PairSamplingInfo* info = nullptr);
std::vector<PairRecord> GeneratePairs(const std::vector<PosedFrame>& frames,
                                      std::size_t count, std::uint64_t seed,
                                      double max_overlap_deg = 90.0,
                                      PairSamplingInfo* info = nullptr);

inline const std::vector<double> kAccuracyThresholdsDeg = {5.0, 10.0, 15.0, 30.0};

struct EvaluationReport {
  std::vector<PairRecord> records;
  double mean_error_deg = 0.0;
  double median_error_deg = 0.0;
  std::vector<double> thresholds_deg;
  std::vector<double> accuracy;  // percent of errors strictly below each threshold
  double histogram_bin_deg = 5.0;
  std::vector<std::size_t> histogram;  // counts over [k*bin, (k+1)*bin) up to 180
};

// Accuracy at one threshold: 100 * |{error < t}| / N.
double AccuracyAt(const std::vector<double>& errors_deg, double threshold_deg);

// Fills error_deg for every record and aggregates. Throws
// IncompleteRecordError naming every pair lacking a rotation.
EvaluationReport Score(std::vector<PairRecord> records,
                       const std::vector<double>& thresholds_deg = kAccuracyThresholdsDeg,
                       double histogram_bin_deg = 5.0);

// One row per pair: reference_id, query_id, gt r00..r22, pred r00..r22, error_deg.
void WriteReportCsv(const EvaluationReport& report, std::ostream& out);

// Summary table with the accuracy columns and mean error.
void PrintSummary(const EvaluationReport& report, const std::string& label, std::ostream& out);

}  // namespace rcpose
