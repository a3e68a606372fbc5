#pragma once

#include <limits>
#include <vector>

#include "cssr/image.hpp"

namespace cssr {

/// Returned by psnr() for identical inputs.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Truncated 1-D Gaussian of `window` taps, normalized to sum to 1. The 2-D
/// window is its outer product.
std::vector<double> gaussian_window(const SsimParams& p);

/// 10 log10(peak^2 / MSE) over every sample of every channel.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Mean SSIM with Gaussian-weighted statistics over the valid region (no
/// padding), averaged across channels.
double ssim(const Image& a, const Image& b, const SsimParams& p = {});

/// Bicubic enlargement of a low-resolution observation for metric reporting.
Image upsample_for_metric(const Image& lowres, int target_width, int target_height);

enum class MetricsMode { Rgb, Y };

struct MetricOptions {
  MetricsMode mode = MetricsMode::Rgb;
  bool eight_bit = false;  // round both inputs to the 1/255 grid first
  int shave = 0;           // border pixels dropped on every side
};

struct QualityScore {
  double psnr;
  double ssim;
};

/// Clamps both inputs to [0,1] and applies the option chain, then scores.
QualityScore evaluate(const Image& test, const Image& reference, const MetricOptions& opt = {});

}  // namespace cssr
