#pragma once

#include <array>
#include <vector>

#include "rcpose/image.hpp"
#include "rcpose/renderer.hpp"

namespace rcpose {

// Standard five-scale MS-SSIM weights.
inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001,
                                                         0.2363, 0.1333};
inline constexpr int kMsSsimWindow = 11;
inline constexpr double kMsSsimSigma = 1.5;

// Largest scale count (<= max_scales) whose coarsest level still fits an
// 11x11 window, i.e. min(width, height) >= 2^(scales-1) * 11. 0 if none.
int FeasibleScales(int width, int height, int max_scales = 5);

// MS-SSIM of two same-shape images in [0, 1]: Gaussian 11x11 window
// (sigma 1.5, valid region only), K1 = 0.01, K2 = 0.03, dynamic range 1,
// contrast-structure at every scale and luminance at the coarsest, 2x2 mean
// pooling between scales. Per-scale terms are clamped at 0 before the
// weighted product, so the result lies in [0, 1]; channels are averaged.
// With fewer than five scales the leading weights are renormalized.
// Throws InvalidArgument on shape mismatch or if the image is too small.
double MsSsim(const ImageF& a, const ImageF& b, int scales = 5);

// MS-SSIM against a fixed image whose pyramid statistics are computed once.
class MsSsimReference {
 public:
  MsSsimReference(const ImageF& reference, int scales = 5);

  double Compare(const ImageF& image) const;
  int scales() const noexcept { return scales_; }

 private:
  struct Level {
    int width = 0;
    int height = 0;
    std::vector<std::vector<float>> planes;  // per channel, width x height
    std::vector<std::vector<float>> mean;    // per channel, valid-size
    std::vector<std::vector<float>> power;   // filtered y^2, valid-size
  };
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  int scales_ = 0;
  std::vector<Level> levels_;
};

enum class LossMode { kRgbAndSemantic, kRgbOnly, kSemanticOnly };

const char* ToString(LossMode mode);
LossMode ParseLossMode(const std::string& text);  // "rgb+sem" | "rgb-only" | "sem-only"

// l1: RGB term, l2: semantic term, each 1 - ms_ssim.
struct LossBreakdown {
  double rgb = 0.0;
  double semantic = 0.0;
  double total = 0.0;
};

// Render-vs-query loss with the query fixed. The query background is zeroed
// by its mask; disabled terms contribute 0. Falls back to fewer MS-SSIM
// scales when the images are too small for five.
class PoseLoss {
 public:
  // query_semantic may be null only in rgb-only mode (ConfigurationError
  // otherwise).
  PoseLoss(const ImageF& query_rgb, const ImageF* query_semantic,
           const Mask& query_mask, LossMode mode);

  LossBreakdown operator()(const RenderOutput& render) const;
  LossMode mode() const noexcept { return mode_; }
  int scales() const noexcept { return scales_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

 private:
  LossMode mode_;
  int width_ = 0;
  int height_ = 0;
  int scales_ = 0;
  std::vector<MsSsimReference> terms_;  // rgb first (if enabled), then semantic
};

}  // namespace rcpose
