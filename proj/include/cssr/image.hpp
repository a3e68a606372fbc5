#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cssr {

enum class ColorSpace : std::uint8_t { Gray, Rgb, YCbCr };

const char* to_string(ColorSpace cs) noexcept;
int channel_count(ColorSpace cs) noexcept;

/// Planar float raster. Samples are stored channel-major, then row-major.
/// The nominal range is [0, 1] but nothing here enforces it: the feedback
/// loop runs unclamped and may push samples outside.
class Image {
 public:
  Image() = default;
  Image(int width, int height, ColorSpace cs, float fill = 0.0f);
  Image(int width, int height, ColorSpace cs, std::vector<float> samples);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channel_count(color_space_); }
  ColorSpace color_space() const noexcept { return color_space_; }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::span<float> samples() noexcept { return data_; }
  std::span<const float> samples() const noexcept { return data_; }

  std::span<float> plane(int c) noexcept {
    return std::span<float>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const float> plane(int c) const noexcept {
    return std::span<const float>(data_).subspan(c * plane_size(), plane_size());
  }

  float& at(int c, int x, int y) noexcept {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }
  float at(int c, int x, int y) const noexcept {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }

  /// Same samples, different tag. Channel counts must agree.
  Image retagged(ColorSpace cs) const;

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           color_space_ == other.color_space_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  ColorSpace color_space_ = ColorSpace::Gray;
  std::vector<float> data_;
};

/// Absolute difference of two images plus the identifiers of its sources.
struct DiffMap {
  Image map;
  std::string source_a;
  std::string source_b;
};

// Netpbm I/O (P5 gray / P6 RGB, maxval 255).
Image load_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> save_ppm(const Image& img);
Image read_ppm_file(const std::string& path);
void write_ppm_file(const std::string& path, const Image& img);

// Full-range BT.601 (JPEG) conversion on [0,1] samples.
Image rgb_to_ycbcr(const Image& img);
Image ycbcr_to_rgb(const Image& img);

/// Top-left crop to the largest size divisible by `m` in both axes.
Image crop_to_multiple(const Image& img, int m);

DiffMap abs_diff(const Image& a, const Image& b, std::string source_a = {},
                 std::string source_b = {});

// Pixel-wise helpers.
Image clamped(const Image& img, float lo = 0.0f, float hi = 1.0f);
Image subtract(const Image& a, const Image& b);
void add_scaled(Image& dst, float scale, const Image& src);  // dst += scale * src
Image scaled(const Image& img, float gain);
double l2_norm(const Image& img);
bool all_finite(const Image& img) noexcept;
void require_same_shape(const Image& a, const Image& b, const char* op);

}  // namespace cssr
