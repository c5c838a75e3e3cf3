#include "rcpose/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rcpose/errors.hpp"

namespace rcpose {

IncompleteRecordError::IncompleteRecordError(std::vector<std::string> ids)
    : Error(ErrorKind::kInvalidArgument,
            "records without ground truth or prediction: " + [&] {
              std::string joined;
              for (const auto& id : ids) joined += (joined.empty() ? "" : ", ") + id;
              return joined;
            }()),
      ids_(std::move(ids)) {}

double SeededRng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

std::uint64_t SeededRng::Below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("SeededRng::Below: bound must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

Eigen::Vector3d SeededRng::UnitVector() {
  const double z = Uniform(-1.0, 1.0);
  const double phi = Uniform(0.0, 2.0 * kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Rotation SeededRng::UniformRotation() {
  // Shoemake's subgroup algorithm.
  const double u1 = Uniform();
  const double u2 = Uniform(0.0, 2.0 * kPi);
  const double u3 = Uniform(0.0, 2.0 * kPi);
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return Rotation::FromQuaternion(b * std::cos(u3), a * std::sin(u2), a * std::cos(u2),
                                  b * std::sin(u3));
}

namespace {

// Enumerating the full ordered-pair pool is affordable up to this size.
constexpr std::size_t kEnumerationLimit = std::size_t{1} << 22;

PairRecord MakePair(const PosedFrame& ref, const PosedFrame& query) {
  PairRecord r;
  r.reference_id = ref.id;
  r.query_id = query.id;
  r.ground_truth = query.rotation * ref.rotation.inverse();
  return r;
}

}  // namespace

std::vector<PairRecord> GeneratePairs(const std::vector<PosedFrame>& references,
                                      const std::vector<PosedFrame>& queries,
                                      std::size_t count, std::uint64_t seed,
                                      double max_overlap_deg, PairSamplingInfo* info) {
  if (references.empty() || queries.empty() || references.size() + queries.size() < 2) {
    throw InvalidArgument("GeneratePairs: need at least two poses");
  }
  const double limit = DegToRad(max_overlap_deg);
  auto qualifies = [&](std::size_t r, std::size_t q) {
    return references[r].id != queries[q].id &&
           InplaneOmittedDistance(references[r].rotation, queries[q].rotation) < limit;
  };
  SeededRng rng(seed);
  std::vector<PairRecord> out;
  out.reserve(count);
  PairSamplingInfo local;

  const std::size_t pool = references.size() * queries.size();
  if (pool <= kEnumerationLimit) {
    std::vector<std::pair<std::size_t, std::size_t>> good;
    for (std::size_t r = 0; r < references.size(); ++r) {
      for (std::size_t q = 0; q < queries.size(); ++q) {
        if (qualifies(r, q)) good.emplace_back(r, q);
      }
    }
    local.qualifying_pairs = good.size();
    if (good.empty()) throw SamplingExhaustedError("GeneratePairs: no pair passes the overlap filter");
    if (good.size() >= count) {
      // Partial Fisher-Yates: the first `count` slots form the sample.
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.Below(good.size() - i));
        std::swap(good[i], good[j]);
        out.push_back(MakePair(references[good[i].first], queries[good[i].second]));
      }
    } else {
      local.with_replacement = true;
      for (std::size_t i = 0; i < count; ++i) {
        const auto& [r, q] = good[static_cast<std::size_t>(rng.Below(good.size()))];
        out.push_back(MakePair(references[r], queries[q]));
      }
    }
  } else {
    std::unordered_set<std::uint64_t> seen;
    const std::size_t budget = std::max<std::size_t>(1000, 1000 * count);
    for (std::size_t attempt = 0; out.size() < count; ++attempt) {
      if (attempt >= budget) {
        throw SamplingExhaustedError("GeneratePairs: attempt budget exhausted after " +
                                     std::to_string(out.size()) + " of " +
                                     std::to_string(count) + " pairs");
      }
      const auto r = static_cast<std::size_t>(rng.Below(references.size()));
      const auto q = static_cast<std::size_t>(rng.Below(queries.size()));
      if (!qualifies(r, q)) continue;
      if (!seen.insert(static_cast<std::uint64_t>(r) * queries.size() + q).second) continue;
      out.push_back(MakePair(references[r], queries[q]));
    }
  }
  if (info != nullptr) *info = local;
  return out;
}

std::vector<PairRecord> GeneratePairs(const std::vector<PosedFrame>& frames,
                                      std::size_t count, std::uint64_t seed,
                                      double max_overlap_deg, PairSamplingInfo* info) {
  if (frames.size() < 2) throw InvalidArgument("GeneratePairs: need at least two poses");
  return GeneratePairs(frames, frames, count, seed, max_overlap_deg, info);
}

double AccuracyAt(const std::vector<double>& errors_deg, double threshold_deg) {
  if (errors_deg.empty()) return 0.0;
  const auto hits = std::count_if(errors_deg.begin(), errors_deg.end(),
                                  [&](double e) { return e < threshold_deg; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(errors_deg.size());
}

EvaluationReport Score(std::vector<PairRecord> records,
                       const std::vector<double>& thresholds_deg, double histogram_bin_deg) {
  std::vector<std::string> missing;
  for (const auto& r : records) {
    if (!r.ground_truth || !r.prediction) missing.push_back(r.reference_id + "->" + r.query_id);
  }
  if (!missing.empty()) throw IncompleteRecordError(std::move(missing));
  if (!(histogram_bin_deg > 0.0)) throw InvalidArgument("Score: histogram bin must be positive");

  EvaluationReport report;
  std::vector<double> errors;
  errors.reserve(records.size());
  for (auto& r : records) {
    r.error_deg = RadToDeg(GeodesicDistance(*r.ground_truth, *r.prediction));
    errors.push_back(*r.error_deg);
  }
  report.records = std::move(records);
  report.thresholds_deg = thresholds_deg;
  report.histogram_bin_deg = histogram_bin_deg;
  report.histogram.assign(static_cast<std::size_t>(std::ceil(180.0 / histogram_bin_deg)), 0);
  if (!errors.empty()) {
    // Sorted before summing so the mean does not depend on record order.
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    report.mean_error_deg =
        std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    const std::size_t n = sorted.size();
    report.median_error_deg =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    for (double e : errors) {
      const auto bin = std::min(report.histogram.size() - 1,
                                static_cast<std::size_t>(e / histogram_bin_deg));
      ++report.histogram[bin];
    }
  }
  for (double t : thresholds_deg) report.accuracy.push_back(AccuracyAt(errors, t));
  return report;
}

void WriteReportCsv(const EvaluationReport& report, std::ostream& out) {
  out << "reference_id,query_id";
  for (const char* prefix : {"gt", "pred"}) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ',' << prefix << '_' << r << c;
    }
  }
  out << ",error_deg\n";
  for (const auto& rec : report.records) {
    out << rec.reference_id << ',' << rec.query_id;
    for (const auto* rot : {&rec.ground_truth, &rec.prediction}) {
      const auto m = (*rot)->RowMajor();
      for (double v : m) out << ',' << fmt::format("{:.9f}", v);
    }
    out << ',' << fmt::format("{:.6f}", *rec.error_deg) << '\n';
  }
}

void PrintSummary(const EvaluationReport& report, const std::string& label, std::ostream& out) {
  out << fmt::format("{:<16}", "mode");
  for (double t : report.thresholds_deg) out << fmt::format("{:>10}", fmt::format("Acc@{:g}", t));
  out << fmt::format("{:>12}{:>8}\n", "mean err", "pairs");
  out << fmt::format("{:<16}", label);
  for (double a : report.accuracy) out << fmt::format("{:>10.2f}", a);
  out << fmt::format("{:>12.2f}{:>8}\n", report.mean_error_deg, report.records.size());
}

}  // namespace rcpose
