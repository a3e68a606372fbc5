#pragma once

#include <array>
#include <span>
#include <vector>

namespace cssr::dct {

using Block = std::array<double, 64>;
using QuantTable = std::array<int, 64>;

/// JPEG Annex K example tables, row-major (not zigzag).
extern const QuantTable kLuminanceBase;
extern const QuantTable kChrominanceBase;

/// libjpeg quality mapping: q < 50 ? 5000 / q : 200 - 2q.
int quality_scale(int quality);

/// clamp(floor((base * s + 50) / 100), 1, 255) entry-wise.
QuantTable scaled_table(const QuantTable& base, int quality);

/// Orthonormal 8x8 type-II DCT and its inverse.
Block forward(const Block& spatial);
Block inverse(const Block& coefficients);

/// Lossy round trip of one [0,1] plane: level shift to [-128, 127], 8x8
/// blocks with edge replication, quantize/dequantize, inverse, unshift.
/// No clamping on the way out.
std::vector<float> quantize_plane(std::span<const float> plane, int width, int height,
                                  const QuantTable& table);

}  // namespace cssr::dct
