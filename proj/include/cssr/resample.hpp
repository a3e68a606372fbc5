#pragma once

#include <vector>

#include "cssr/image.hpp"

namespace cssr::resample {

enum class Kernel { Box, Triangle, CatmullRom };

/// Catmull-Rom cubic (a = -0.5).
double cubic(double x) noexcept;
double triangle(double x) noexcept;

struct Tap {
  int index;
  double weight;
};

/// Taps contributing to each output sample along one axis. Indices are
/// already clamped to [0, src_len).
using AxisWeights = std::vector<std::vector<Tap>>;

/// Enlargement by `factor`. Output sample i sits at source coordinate
/// (i + 0.5) / factor - 0.5.
AxisWeights upsample_weights(int src_len, int factor, Kernel kernel);

/// Reduction by `factor` with the kernel stretched by `factor` (antialiasing).
/// Output sample i is centred on source coordinate (i + 0.5) * factor - 0.5.
AxisWeights downsample_weights(int src_len, int factor, Kernel kernel);

/// Separable pass: horizontal then vertical, double accumulation.
Image apply(const Image& src, const AxisWeights& horizontal, const AxisWeights& vertical);

}  // namespace cssr::resample
