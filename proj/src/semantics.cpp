#include "rcpose/semantics.hpp"

#include <algorithm>
#include <limits>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "rcpose/errors.hpp"

namespace rcpose {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'P', 'F', '1'};
// Upper bound on the payload (floats) accepted from a container header.
constexpr std::uint64_t kMaxFeatureValues = std::uint64_t{1} << 31;

void FlipToLargestPositive(Eigen::MatrixXd& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < basis.rows(); ++r) {
      if (std::abs(basis(r, c)) > std::abs(basis(arg, c))) arg = r;
    }
    if (basis(arg, c) < 0.0) basis.col(c) *= -1.0;
  }
}

std::uint32_t DecodeU32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void EncodeU32(std::uint32_t v, std::ostream& out) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

}  // namespace

Eigen::Vector3d PcaTransform::Project(const float* feature) const {
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int i = 0; i < dims(); ++i) {
    const double centered = static_cast<double>(feature[i]) - mean[i];
    out += centered * basis.row(i).transpose();
  }
  return out;
}

bool TokenMasked(const FeatureMap& features, const Mask& mask, std::uint32_t x,
                 std::uint32_t y) {
  const auto px = static_cast<int>(
      std::floor((x + 0.5) * mask.width() / static_cast<double>(features.width)));
  const auto py = static_cast<int>(
      std::floor((y + 0.5) * mask.height() / static_cast<double>(features.height)));
  return mask.at(std::min(px, mask.width() - 1), std::min(py, mask.height() - 1)) != 0;
}

PcaTransform FitPca(const FeatureMap& features, const Mask& mask) {
  const int d = static_cast<int>(features.channels);
  if (d < 3) throw InvalidArgument("FitPca: need at least 3 feature channels");
  if (mask.empty()) throw InvalidArgument("FitPca: empty mask");

  std::vector<const float*> rows;
  for (std::uint32_t y = 0; y < features.height; ++y) {
    for (std::uint32_t x = 0; x < features.width; ++x) {
      if (TokenMasked(features, mask, x, y)) rows.push_back(features.token(x, y));
    }
  }
  const auto k = static_cast<Eigen::Index>(rows.size());
  if (k < 3) throw DegenerateError("FitPca: fewer than 3 masked feature vectors");

  Eigen::MatrixXd centered(k, d);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (int c = 0; c < d; ++c) centered(r, c) = rows[static_cast<std::size_t>(r)][c];
  }
  PcaTransform t;
  t.mean = centered.colwise().mean().transpose();
  centered.rowwise() -= t.mean.transpose();

  // Eigen-decompose whichever of the covariance (d x d) and the Gram matrix
  // (k x k) is smaller; both share the non-zero spectrum.
  Eigen::MatrixXd basis(d, 3);
  Eigen::Vector3d top;
  if (d <= k) {
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DegenerateError("FitPca: eigensolver failed");
    t.total_variance = cov.trace();
    for (int j = 0; j < 3; ++j) {
      top[j] = solver.eigenvalues()[d - 1 - j];
      basis.col(j) = solver.eigenvectors().col(d - 1 - j);
    }
  } else {
    const Eigen::MatrixXd gram = centered * centered.transpose() / static_cast<double>(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw DegenerateError("FitPca: eigensolver failed");
    t.total_variance = gram.trace();
    for (int j = 0; j < 3; ++j) {
      top[j] = solver.eigenvalues()[k - 1 - j];
      const Eigen::VectorXd dir = centered.transpose() * solver.eigenvectors().col(k - 1 - j);
      const double n = dir.norm();
      basis.col(j) = n > 0.0 ? Eigen::VectorXd(dir / n) : Eigen::VectorXd::Zero(d);
    }
  }
  if (!(top[2] > 1e-12 * std::max(top[0], 1e-300))) {
    throw DegenerateError("FitPca: masked feature covariance has rank < 3");
  }
  FlipToLargestPositive(basis);
  t.basis = std::move(basis);
  t.eigenvalues = top;

  t.out_min = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  t.out_max = -t.out_min;
  for (const float* row : rows) {
    const Eigen::Vector3d p = t.Project(row);
    t.out_min = t.out_min.cwiseMin(p);
    t.out_max = t.out_max.cwiseMax(p);
  }
  return t;
}

SemanticMap ApplyPca(const FeatureMap& features, const PcaTransform& transform,
                     const Mask& mask, int target_width, int target_height) {
  if (static_cast<int>(features.channels) != transform.dims()) {
    throw InvalidArgument("ApplyPca: feature dimension does not match the transform");
  }
  if (mask.width() != target_width || mask.height() != target_height) {
    throw InvalidArgument("ApplyPca: mask does not match the target size");
  }
  if (features.width == 0 || features.height == 0) {
    throw InvalidArgument("ApplyPca: empty feature grid");
  }
  std::vector<Eigen::Vector3f> grid(static_cast<std::size_t>(features.width) * features.height);
  for (std::uint32_t y = 0; y < features.height; ++y) {
    for (std::uint32_t x = 0; x < features.width; ++x) {
      const Eigen::Vector3d p = transform.Project(features.token(x, y));
      Eigen::Vector3f v;
      for (int c = 0; c < 3; ++c) {
        const double range = transform.out_max[c] - transform.out_min[c];
        const double n = range > 0.0 ? (p[c] - transform.out_min[c]) / range : 0.5;
        v[c] = static_cast<float>(std::clamp(n, 0.0, 1.0));
      }
      grid[static_cast<std::size_t>(y) * features.width + x] = v;
    }
  }
  SemanticMap out{ImageF(target_width, target_height, 3), mask};
  for (int py = 0; py < target_height; ++py) {
    const auto ty = std::min<std::uint32_t>(
        static_cast<std::uint32_t>(static_cast<std::uint64_t>(py) * features.height / target_height),
        features.height - 1);
    for (int px = 0; px < target_width; ++px) {
      if (mask.at(px, py) == 0) continue;
      const auto tx = std::min<std::uint32_t>(
          static_cast<std::uint32_t>(static_cast<std::uint64_t>(px) * features.width / target_width),
          features.width - 1);
      const Eigen::Vector3f& v = grid[static_cast<std::size_t>(ty) * features.width + tx];
      for (int c = 0; c < 3; ++c) out.values.at(px, py, c) = v[c];
    }
  }
  return out;
}

FeatureMap ReadFeatures(std::istream& in) {
  std::array<unsigned char, 20> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got < 4) throw FormatError(got, "feature container truncated before magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), header.begin(),
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw FormatError(0, "bad feature container magic");
  }
  if (got < header.size()) throw FormatError(got, "feature container header truncated");

  FeatureMap f;
  f.width = DecodeU32(&header[4]);
  f.height = DecodeU32(&header[8]);
  f.channels = DecodeU32(&header[12]);
  f.patch_size = DecodeU32(&header[16]);
  const std::uint64_t count = std::uint64_t{f.width} * f.height * f.channels;
  if (f.width != 0 && f.height != 0 && f.channels != 0 &&
      count / f.width / f.height != f.channels) {
    throw FormatError(4, "feature container dimensions overflow");
  }
  if (count > kMaxFeatureValues) throw FormatError(4, "feature container dimensions overflow");

  // Chunked so a lying header cannot force a huge allocation up front.
  constexpr std::size_t kChunkValues = std::size_t{1} << 20;
  std::vector<unsigned char> chunk;
  f.data.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, kChunkValues)));
  std::size_t offset = header.size();
  for (std::uint64_t done = 0; done < count;) {
    const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(count - done, kChunkValues));
    chunk.resize(4 * n);
    in.read(reinterpret_cast<char*>(chunk.data()), static_cast<std::streamsize>(chunk.size()));
    const auto read = static_cast<std::size_t>(in.gcount());
    if (read != chunk.size()) {
      throw FormatError(offset + read, "feature container payload truncated");
    }
    for (std::size_t i = 0; i < n; ++i) {
      f.data.push_back(std::bit_cast<float>(DecodeU32(&chunk[4 * i])));
    }
    offset += read;
    done += n;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(offset, "feature container has bytes beyond the declared payload");
  }
  return f;
}

FeatureMap LoadFeatures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open feature file");
  return ReadFeatures(in);
}

void WriteFeatures(const FeatureMap& features, std::ostream& out) {
  if (features.data.size() !=
      std::size_t{features.width} * features.height * features.channels) {
    throw InvalidArgument("WriteFeatures: header dims do not match the payload");
  }
  out.write(kMagic.data(), kMagic.size());
  EncodeU32(features.width, out);
  EncodeU32(features.height, out);
  EncodeU32(features.channels, out);
  EncodeU32(features.patch_size, out);
  for (float v : features.data) EncodeU32(std::bit_cast<std::uint32_t>(v), out);
}

void SaveFeatures(const FeatureMap& features, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot create feature file");
  WriteFeatures(features, out);
  if (!out) throw IoError(path.string(), "failed writing feature file");
}

}  // namespace rcpose
