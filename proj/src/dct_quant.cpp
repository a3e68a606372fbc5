#include "cssr/dct_quant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cssr/error.hpp"

namespace cssr::dct {

const QuantTable kLuminanceBase = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

const QuantTable kChrominanceBase = {
    17, 18, 24, 47, 99, 99, 99, 99,  //
    18, 21, 26, 66, 99, 99, 99, 99,  //
    24, 26, 56, 99, 99, 99, 99, 99,  //
    47, 66, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,
};

namespace {

// basis[u][x] = c(u) cos((2x + 1) u pi / 16), c(0) = sqrt(1/8), else sqrt(2/8).
struct Basis {
  double m[8][8];
  Basis() {
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(0.125) : 0.5;
      for (int x = 0; x < 8; ++x) {
        m[u][x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    }
  }
};

const Basis& basis() {
  static const Basis b;
  return b;
}

}  // namespace

int quality_scale(int quality) {
  if (quality < 1 || quality > 100) {
    throw ConfigError("DCT quality must be in 1..100, got " + std::to_string(quality));
  }
  return quality < 50 ? 5000 / quality : 200 - 2 * quality;
}

QuantTable scaled_table(const QuantTable& base, int quality) {
  const int s = quality_scale(quality);
  QuantTable out{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp((base[i] * s + 50) / 100, 1, 255);
  }
  return out;
}

Block forward(const Block& spatial) {
  const auto& m = basis().m;
  Block tmp{}, out{};
  // rows: tmp[y][u] = sum_x m[u][x] * in[y][x]
  for (int y = 0; y < 8; ++y) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += m[u][x] * spatial[y * 8 + x];
      tmp[y * 8 + u] = acc;
    }
  }
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += m[v][y] * tmp[y * 8 + u];
      out[v * 8 + u] = acc;
    }
  }
  return out;
}

Block inverse(const Block& coefficients) {
  const auto& m = basis().m;
  Block tmp{}, out{};
  for (int v = 0; v < 8; ++v) {
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += m[u][x] * coefficients[v * 8 + u];
      tmp[v * 8 + x] = acc;
    }
  }
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += m[v][y] * tmp[v * 8 + x];
      out[y * 8 + x] = acc;
    }
  }
  return out;
}

std::vector<float> quantize_plane(std::span<const float> plane, int width, int height,
                                  const QuantTable& table) {
  std::vector<float> out(plane.size());
  Block block{};
  for (int by = 0; by < height; by += 8) {
    for (int bx = 0; bx < width; bx += 8) {
      for (int y = 0; y < 8; ++y) {
        const int sy = std::min(by + y, height - 1);
        for (int x = 0; x < 8; ++x) {
          const int sx = std::min(bx + x, width - 1);
          block[y * 8 + x] = plane[static_cast<std::size_t>(sy) * width + sx] * 255.0 - 128.0;
        }
      }
      Block coeff = forward(block);
      for (int i = 0; i < 64; ++i) {
        coeff[i] = std::round(coeff[i] / table[i]) * table[i];
      }
      const Block restored = inverse(coeff);
      for (int y = 0; y < 8 && by + y < height; ++y) {
        for (int x = 0; x < 8 && bx + x < width; ++x) {
          out[static_cast<std::size_t>(by + y) * width + bx + x] =
              static_cast<float>((restored[y * 8 + x] + 128.0) / 255.0);
        }
      }
    }
  }
  return out;
}

}  // namespace cssr::dct
