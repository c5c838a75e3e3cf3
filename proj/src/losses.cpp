#include "rcpose/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "rcpose/errors.hpp"

namespace rcpose {

namespace {

constexpr float kC1 = 0.01f * 0.01f;
constexpr float kC2 = 0.03f * 0.03f;
constexpr int kRadius = kMsSsimWindow / 2;

const std::array<float, kMsSsimWindow>& GaussianTaps() {
  static const std::array<float, kMsSsimWindow> taps = [] {
    std::array<double, kMsSsimWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kMsSsimWindow; ++i) {
      const double d = i - kRadius;
      g[i] = std::exp(-d * d / (2.0 * kMsSsimSigma * kMsSsimSigma));
      sum += g[i];
    }
    std::array<float, kMsSsimWindow> out{};
    for (int i = 0; i < kMsSsimWindow; ++i) out[i] = static_cast<float>(g[i] / sum);
    return out;
  }();
  return taps;
}

// Separable Gaussian over the valid region: (w - 10) x (h - 10) outputs.
void FilterValid(const float* __restrict in, int w, int h, std::vector<float>& tmp,
                 float* __restrict out) {
  const auto& taps = GaussianTaps();
  const float* __restrict g = taps.data();
  const int ow = w - 2 * kRadius;
  const int oh = h - 2 * kRadius;
  tmp.resize(static_cast<std::size_t>(h) * ow);
  float* __restrict mid = tmp.data();
  for (int r = 0; r < h; ++r) {
    const float* s = in + static_cast<std::size_t>(r) * w;
    float* d = mid + static_cast<std::size_t>(r) * ow;
    for (int i = 0; i < ow; ++i) {
      float acc = g[0] * s[i];
#pragma GCC unroll 16
      for (int k = 1; k < kMsSsimWindow; ++k) acc += g[k] * s[i + k];
      d[i] = acc;
    }
  }
  for (int r = 0; r < oh; ++r) {
    const float* s = mid + static_cast<std::size_t>(r) * ow;
    float* d = out + static_cast<std::size_t>(r) * ow;
    for (int i = 0; i < ow; ++i) {
      float acc = g[0] * s[i];
#pragma GCC unroll 16
      for (int k = 1; k < kMsSsimWindow; ++k) acc += g[k] * s[static_cast<std::size_t>(k) * ow + i];
      d[i] = acc;
    }
  }
}

// Gaussian moments of x: E[x], E[x^2] and E[x y]. y may alias x.
void FilterMoments(const float* x, const float* y, int w, int h, std::vector<float>& tmp,
                   std::vector<float>& prod, float* mean, float* power, float* cross) {
  const std::size_t n = static_cast<std::size_t>(w) * h;
  prod.resize(n);
  float* __restrict pp = prod.data();
  FilterValid(x, w, h, tmp, mean);
  for (std::size_t i = 0; i < n; ++i) pp[i] = x[i] * x[i];
  FilterValid(pp, w, h, tmp, power);
  if (cross != nullptr) {
    for (std::size_t i = 0; i < n; ++i) pp[i] = x[i] * y[i];
    FilterValid(pp, w, h, tmp, cross);
  }
}

void Pool2x2(const float* in, int w, int h, std::vector<float>& out) {
  const int ow = w / 2;
  const int oh = h / 2;
  out.resize(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    const float* r0 = in + static_cast<std::size_t>(2 * y) * w;
    const float* r1 = r0 + w;
    float* dst = out.data() + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      dst[x] = 0.25f * ((r0[2 * x] + r0[2 * x + 1]) + (r1[2 * x] + r1[2 * x + 1]));
    }
  }
}

void ChannelPlane(const ImageF& image, int c, std::vector<float>& plane) {
  plane.resize(image.pixel_count());
  const float* src = image.storage().data();
  const int n = image.channels();
  for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = src[i * n + c];
}

// cs (or l * cs at the coarsest scale) of one window.
inline float SsimTerm(float mx, float my, float pxx, float pyy, float pxy, bool with_luminance) {
  const float sxx = pxx - mx * mx;
  const float syy = pyy - my * my;
  const float sxy = pxy - mx * my;
  float v = (2.0f * sxy + kC2) / (sxx + syy + kC2);
  if (with_luminance) v *= (2.0f * (mx * my) + kC1) / (mx * mx + my * my + kC1);
  return v;
}

struct Scratch {
  std::vector<float> plane, pooled, tmp, prod, mean, power, cross;
};

std::vector<double> Weights(int scales) {
  std::vector<double> w(kMsSsimWeights.begin(), kMsSsimWeights.begin() + scales);
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

int FeasibleScales(int width, int height, int max_scales) {
  const int side = std::min(width, height);
  int scales = 0;
  while (scales < max_scales && side >= (kMsSsimWindow << scales)) ++scales;
  return scales;
}

MsSsimReference::MsSsimReference(const ImageF& reference, int scales)
    : width_(reference.width()),
      height_(reference.height()),
      channels_(reference.channels()),
      scales_(scales) {
  if (scales < 1 || scales > static_cast<int>(kMsSsimWeights.size())) {
    throw InvalidArgument("MS-SSIM: scale count must be in [1, 5]");
  }
  if (reference.empty() || FeasibleScales(width_, height_, scales) < scales) {
    throw InvalidArgument("MS-SSIM: image of " + std::to_string(width_) + "x" +
                          std::to_string(height_) + " is too small for " +
                          std::to_string(scales) + " scales");
  }
  levels_.resize(static_cast<std::size_t>(scales));
  Scratch sc;
  for (int c = 0; c < channels_; ++c) {
    ChannelPlane(reference, c, sc.plane);
    int w = width_;
    int h = height_;
    for (int s = 0; s < scales; ++s) {
      if (s > 0) {
        Pool2x2(sc.plane.data(), w, h, sc.pooled);
        std::swap(sc.plane, sc.pooled);
        w /= 2;
        h /= 2;
      }
      Level& level = levels_[static_cast<std::size_t>(s)];
      level.width = w;
      level.height = h;
      const std::size_t valid = static_cast<std::size_t>(w - 2 * kRadius) * (h - 2 * kRadius);
      std::vector<float> mean(valid), power(valid);
      FilterMoments(sc.plane.data(), nullptr, w, h, sc.tmp, sc.prod, mean.data(), power.data(),
                    nullptr);
      level.planes.push_back(sc.plane);
      level.mean.push_back(std::move(mean));
      level.power.push_back(std::move(power));
    }
  }
}

double MsSsimReference::Compare(const ImageF& image) const {
  if (image.width() != width_ || image.height() != height_ ||
      image.channels() != channels_) {
    throw InvalidArgument("MS-SSIM: image shapes differ");
  }
  const std::vector<double> weights = Weights(scales_);
  thread_local Scratch scratch;
  Scratch& sc = scratch;
  double total = 0.0;
  for (int c = 0; c < channels_; ++c) {
    ChannelPlane(image, c, sc.plane);
    int w = width_;
    int h = height_;
    double value = 1.0;
    for (int s = 0; s < scales_; ++s) {
      const Level& level = levels_[static_cast<std::size_t>(s)];
      if (s > 0) {
        Pool2x2(sc.plane.data(), w, h, sc.pooled);
        std::swap(sc.plane, sc.pooled);
        w /= 2;
        h /= 2;
      }
      const int ow = w - 2 * kRadius;
      const int oh = h - 2 * kRadius;
      const std::size_t valid = static_cast<std::size_t>(ow) * oh;
      sc.mean.resize(valid);
      sc.power.resize(valid);
      sc.cross.resize(valid);
      FilterMoments(sc.plane.data(), level.planes[static_cast<std::size_t>(c)].data(), w, h,
                    sc.tmp, sc.prod, sc.mean.data(), sc.power.data(), sc.cross.data());
      const float* mean_x = sc.mean.data();
      const float* power_x = sc.power.data();
      const float* cross = sc.cross.data();
      const float* mean_y = level.mean[static_cast<std::size_t>(c)].data();
      const float* power_y = level.power[static_cast<std::size_t>(c)].data();

      const bool coarsest = s == scales_ - 1;
      // Fixed-order lane sums keep the result independent of vector width.
      constexpr int kLanes = 16;
      std::array<float, kLanes> lanes{};
      std::size_t j = 0;
      for (; j + kLanes <= valid; j += kLanes) {
        for (int l = 0; l < kLanes; ++l) {
          lanes[l] += SsimTerm(mean_x[j + l], mean_y[j + l], power_x[j + l], power_y[j + l],
                               cross[j + l], coarsest);
        }
      }
      double sum = 0.0;
      for (; j < valid; ++j) {
        sum += SsimTerm(mean_x[j], mean_y[j], power_x[j], power_y[j], cross[j], coarsest);
      }
      for (float v : lanes) sum += v;
      const double term = sum / static_cast<double>(valid);
      value *= std::pow(std::max(term, 0.0), weights[static_cast<std::size_t>(s)]);
    }
    total += value;
  }
  return total / channels_;
}

double MsSsim(const ImageF& a, const ImageF& b, int scales) {
  if (!a.same_shape(b)) throw InvalidArgument("MS-SSIM: image shapes differ");
  return MsSsimReference(b, scales).Compare(a);
}

const char* ToString(LossMode mode) {
  switch (mode) {
    case LossMode::kRgbAndSemantic:
      return "rgb+sem";
    case LossMode::kRgbOnly:
      return "rgb-only";
    case LossMode::kSemanticOnly:
      return "sem-only";
  }
  return "?";
}

LossMode ParseLossMode(const std::string& text) {
  if (text == "rgb+sem") return LossMode::kRgbAndSemantic;
  if (text == "rgb-only") return LossMode::kRgbOnly;
  if (text == "sem-only") return LossMode::kSemanticOnly;
  throw ConfigurationError("unknown loss mode '" + text +
                           "' (expected rgb+sem, rgb-only or sem-only)");
}

PoseLoss::PoseLoss(const ImageF& query_rgb, const ImageF* query_semantic,
                   const Mask& query_mask, LossMode mode)
    : mode_(mode), width_(query_rgb.width()), height_(query_rgb.height()) {
  const bool use_rgb = mode != LossMode::kSemanticOnly;
  const bool use_sem = mode != LossMode::kRgbOnly;
  if (use_sem && query_semantic == nullptr) {
    throw ConfigurationError(std::string("loss mode ") + ToString(mode) +
                             " needs a query semantic map");
  }
  scales_ = FeasibleScales(width_, height_);
  if (scales_ == 0) {
    throw InvalidArgument("PoseLoss: query image smaller than one MS-SSIM window");
  }
  if (use_rgb) terms_.emplace_back(MaskedCopy(query_rgb, query_mask), scales_);
  if (use_sem) {
    if (query_semantic->width() != width_ || query_semantic->height() != height_) {
      throw InvalidArgument("PoseLoss: query semantic map size differs from rgb");
    }
    terms_.emplace_back(MaskedCopy(*query_semantic, query_mask), scales_);
  }
}

LossBreakdown PoseLoss::operator()(const RenderOutput& render) const {
  LossBreakdown loss;
  std::size_t term = 0;
  if (mode_ != LossMode::kSemanticOnly) loss.rgb = 1.0 - terms_[term++].Compare(render.rgb);
  if (mode_ != LossMode::kRgbOnly) loss.semantic = 1.0 - terms_[term].Compare(render.semantic);
  loss.total = loss.rgb + loss.semantic;
  return loss;
}

}  // namespace rcpose
