#include "cssr/image.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cssr/error.hpp"

namespace cssr {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw ContractError("image dimensions must be at least 1x1, got " +
                        std::to_string(width) + "x" + std::to_string(height));
  }
}

constexpr double kKr = 0.299;
constexpr double kKg = 0.587;
constexpr double kKb = 0.114;
constexpr double kCbScale = 1.772;  // 2 * (1 - kKb)
constexpr double kCrScale = 1.402;  // 2 * (1 - kKr)

}  // namespace

const char* to_string(ColorSpace cs) noexcept {
  switch (cs) {
    case ColorSpace::Gray: return "Gray";
    case ColorSpace::Rgb: return "RGB";
    case ColorSpace::YCbCr: return "YCbCr";
  }
  return "?";
}

int channel_count(ColorSpace cs) noexcept { return cs == ColorSpace::Gray ? 1 : 3; }

Image::Image(int width, int height, ColorSpace cs, float fill)
    : width_(width), height_(height), color_space_(cs) {
  check_dims(width, height);
  data_.assign(plane_size() * channel_count(cs), fill);
}

Image::Image(int width, int height, ColorSpace cs, std::vector<float> samples)
    : width_(width), height_(height), color_space_(cs), data_(std::move(samples)) {
  check_dims(width, height);
  if (data_.size() != plane_size() * channel_count(cs)) {
    throw ContractError("sample count " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(width) + "x" +
                        std::to_string(height) + "x" +
                        std::to_string(channel_count(cs)));
  }
}

Image Image::retagged(ColorSpace cs) const {
  if (channel_count(cs) != channels()) {
    throw ContractError(std::string("cannot retag ") + to_string(color_space_) +
                        " as " + to_string(cs));
  }
  Image out = *this;
  out.color_space_ = cs;
  return out;
}

Image rgb_to_ycbcr(const Image& img) {
  if (img.color_space() != ColorSpace::Rgb) {
    throw ContractError(std::string("rgb_to_ycbcr expects RGB input, got ") +
                        to_string(img.color_space()));
  }
  Image out(img.width(), img.height(), ColorSpace::YCbCr);
  const auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto y = out.plane(0), cb = out.plane(1), cr = out.plane(2);
  for (std::size_t i = 0; i < img.plane_size(); ++i) {
    const double luma = kKr * r[i] + kKg * g[i] + kKb * b[i];
    y[i] = static_cast<float>(luma);
    cb[i] = static_cast<float>((b[i] - luma) / kCbScale + 0.5);
    cr[i] = static_cast<float>((r[i] - luma) / kCrScale + 0.5);
  }
  return out;
}

Image ycbcr_to_rgb(const Image& img) {
  if (img.color_space() != ColorSpace::YCbCr) {
    throw ContractError(std::string("ycbcr_to_rgb expects YCbCr input, got ") +
                        to_string(img.color_space()));
  }
  Image out(img.width(), img.height(), ColorSpace::Rgb);
  const auto y = img.plane(0), cb = img.plane(1), cr = img.plane(2);
  auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
  for (std::size_t i = 0; i < img.plane_size(); ++i) {
    const double luma = y[i];
    const double red = luma + kCrScale * (cr[i] - 0.5);
    const double blue = luma + kCbScale * (cb[i] - 0.5);
    r[i] = static_cast<float>(red);
    b[i] = static_cast<float>(blue);
    g[i] = static_cast<float>((luma - kKr * red - kKb * blue) / kKg);
  }
  return out;
}

Image crop_to_multiple(const Image& img, int m) {
  if (m < 1) throw ConfigError("crop factor must be >= 1, got " + std::to_string(m));
  const int w = img.width() / m * m;
  const int h = img.height() / m * m;
  if (w == 0 || h == 0) {
    throw ImageTooSmallError("image " + std::to_string(img.width()) + "x" +
                             std::to_string(img.height()) +
                             " is smaller than factor " + std::to_string(m));
  }
  if (w == img.width() && h == img.height()) return img;

  Image out(w, h, img.color_space());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      const auto src = img.plane(c).subspan(static_cast<std::size_t>(y) * img.width(), w);
      std::copy(src.begin(), src.end(),
                out.plane(c).begin() + static_cast<std::ptrdiff_t>(y) * w);
    }
  }
  return out;
}

void require_same_shape(const Image& a, const Image& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ContractError(std::string(op) + ": shape mismatch " +
                        std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                        " " + to_string(a.color_space()) + " vs " +
                        std::to_string(b.width()) + "x" + std::to_string(b.height()) +
                        " " + to_string(b.color_space()));
  }
}

DiffMap abs_diff(const Image& a, const Image& b, std::string source_a,
                 std::string source_b) {
  require_same_shape(a, b, "abs_diff");
  if (a.color_space() == ColorSpace::YCbCr) {
    throw ContractError("abs_diff expects RGB or Gray input");
  }
  Image out(a.width(), a.height(), a.color_space());
  const auto sa = a.samples(), sb = b.samples();
  auto so = out.samples();
  for (std::size_t i = 0; i < sa.size(); ++i) so[i] = std::fabs(sa[i] - sb[i]);
  return {std::move(out), std::move(source_a), std::move(source_b)};
}

Image clamped(const Image& img, float lo, float hi) {
  Image out = img;
  for (float& v : out.samples()) v = std::clamp(v, lo, hi);
  return out;
}

Image subtract(const Image& a, const Image& b) {
  require_same_shape(a, b, "subtract");
  Image out = a;
  auto so = out.samples();
  const auto sb = b.samples();
  for (std::size_t i = 0; i < so.size(); ++i) so[i] -= sb[i];
  return out;
}

void add_scaled(Image& dst, float scale, const Image& src) {
  require_same_shape(dst, src, "add_scaled");
  auto sd = dst.samples();
  const auto ss = src.samples();
  for (std::size_t i = 0; i < sd.size(); ++i) sd[i] += scale * ss[i];
}

Image scaled(const Image& img, float gain) {
  Image out = img;
  for (float& v : out.samples()) v *= gain;
  return out;
}

double l2_norm(const Image& img) {
  double sum = 0.0;
  for (float v : img.samples()) sum += static_cast<double>(v) * v;
  return std::sqrt(sum);
}

bool all_finite(const Image& img) noexcept {
  return std::all_of(img.samples().begin(), img.samples().end(),
                     [](float v) { return std::isfinite(v); });
}

}  // namespace cssr
