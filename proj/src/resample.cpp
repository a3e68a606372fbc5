#include "cssr/resample.hpp"

#include <algorithm>
#include <cmath>

namespace cssr::resample {

namespace {

double evaluate(Kernel kernel, double x) {
  switch (kernel) {
    case Kernel::Box: return std::fabs(x) < 0.5 ? 1.0 : 0.0;
    case Kernel::Triangle: return triangle(x);
    case Kernel::CatmullRom: return cubic(x);
  }
  return 0.0;
}

double support(Kernel kernel) {
  switch (kernel) {
    case Kernel::Box: return 0.5;
    case Kernel::Triangle: return 1.0;
    case Kernel::CatmullRom: return 2.0;
  }
  return 0.0;
}

std::vector<Tap> normalized(std::vector<Tap> taps) {
  double sum = 0.0;
  for (const Tap& t : taps) sum += t.weight;
  if (sum != 0.0) {
    for (Tap& t : taps) t.weight /= sum;
  }
  return taps;
}

}  // namespace

double cubic(double x) noexcept {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

double triangle(double x) noexcept {
  x = std::fabs(x);
  return x < 1.0 ? 1.0 - x : 0.0;
}

AxisWeights upsample_weights(int src_len, int factor, Kernel kernel) {
  const int out_len = src_len * factor;
  const double radius = support(kernel);
  AxisWeights weights(out_len);
  for (int i = 0; i < out_len; ++i) {
    const double center = (i + 0.5) / factor - 0.5;
    const int first = static_cast<int>(std::ceil(center - radius));
    const int last = static_cast<int>(std::floor(center + radius));
    std::vector<Tap> taps;
    for (int j = first; j <= last; ++j) {
      const double w = evaluate(kernel, center - j);
      if (w != 0.0) taps.push_back({std::clamp(j, 0, src_len - 1), w});
    }
    weights[i] = normalized(std::move(taps));
  }
  return weights;
}

AxisWeights downsample_weights(int src_len, int factor, Kernel kernel) {
  const int out_len = src_len / factor;
  const double radius = support(kernel) * factor;
  AxisWeights weights(out_len);
  for (int i = 0; i < out_len; ++i) {
    const double center = (i + 0.5) * factor - 0.5;
    const int first = static_cast<int>(std::ceil(center - radius));
    const int last = static_cast<int>(std::floor(center + radius));
    std::vector<Tap> taps;
    for (int j = first; j <= last; ++j) {
      const double w = evaluate(kernel, (j - center) / factor);
      if (w != 0.0) taps.push_back({std::clamp(j, 0, src_len - 1), w});
    }
    weights[i] = normalized(std::move(taps));
  }
  return weights;
}

Image apply(const Image& src, const AxisWeights& horizontal, const AxisWeights& vertical) {
  const int src_w = src.width();
  const int src_h = src.height();
  const int out_w = static_cast<int>(horizontal.size());
  const int out_h = static_cast<int>(vertical.size());
  Image out(out_w, out_h, src.color_space());

  std::vector<double> rows(static_cast<std::size_t>(out_w) * src_h);
  for (int c = 0; c < src.channels(); ++c) {
    const auto in = src.plane(c);
    for (int y = 0; y < src_h; ++y) {
      const float* row = in.data() + static_cast<std::size_t>(y) * src_w;
      double* dst = rows.data() + static_cast<std::size_t>(y) * out_w;
      for (int x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (const Tap& t : horizontal[x]) acc += t.weight * row[t.index];
        dst[x] = acc;
      }
    }
    auto plane = out.plane(c);
    for (int y = 0; y < out_h; ++y) {
      float* dst = plane.data() + static_cast<std::size_t>(y) * out_w;
      for (int x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (const Tap& t : vertical[y]) {
          acc += t.weight * rows[static_cast<std::size_t>(t.index) * out_w + x];
        }
        dst[x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace cssr::resample
