#include "cssr/metrics.hpp"

#include <cmath>
#include <string>

#include "cssr/error.hpp"
#include "cssr/operators.hpp"

namespace cssr {

namespace {

// Valid-region separable filter of one plane; output is
// (w - k + 1) x (h - k + 1).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::vector<double>& kernel) {
  const int k = static_cast<int>(kernel.size());
  const int ow = w - k + 1;
  const int oh = h - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += kernel[i] * src[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += kernel[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

double ssim_plane(std::span<const float> a, std::span<const float> b, int w, int h,
                  const std::vector<double>& kernel, const SsimParams& p) {
  const std::size_t n = a.size();
  std::vector<double> va(n), vb(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    va[i] = a[i];
    vb[i] = b[i];
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto mu_a = filter_valid(va, w, h, kernel);
  const auto mu_b = filter_valid(vb, w, h, kernel);
  const auto e_aa = filter_valid(aa, w, h, kernel);
  const auto e_bb = filter_valid(bb, w, h, kernel);
  const auto e_ab = filter_valid(ab, w, h, kernel);

  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return sum / static_cast<double>(mu_a.size());
}

Image luma(const Image& img) {
  if (img.color_space() == ColorSpace::Gray) return img;
  const Image ycc = img.color_space() == ColorSpace::Rgb ? rgb_to_ycbcr(img) : img;
  Image y(img.width(), img.height(), ColorSpace::Gray);
  std::copy(ycc.plane(0).begin(), ycc.plane(0).end(), y.plane(0).begin());
  return y;
}

Image shave(const Image& img, int border) {
  if (border == 0) return img;
  const int w = img.width() - 2 * border;
  const int h = img.height() - 2 * border;
  if (w < 1 || h < 1) throw MetricError("shave of " + std::to_string(border) + " leaves no pixels");
  Image out(w, h, img.color_space());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(c, x, y) = img.at(c, x + border, y + border);
    }
  }
  return out;
}

Image prepare(const Image& img, const MetricOptions& opt) {
  Image out = clamped(img);
  if (opt.eight_bit) {
    for (float& v : out.samples()) v = static_cast<float>(std::round(v * 255.0) / 255.0);
  }
  if (opt.mode == MetricsMode::Y) out = luma(out);
  return shave(out, opt.shave);
}

}  // namespace

std::vector<double> gaussian_window(const SsimParams& p) {
  std::vector<double> w(p.window);
  const double center = (p.window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < p.window; ++i) {
    const double d = i - center;
    w[i] = std::exp(-(d * d) / (2.0 * p.sigma * p.sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

double psnr(const Image& a, const Image& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (!(peak > 0.0)) throw ContractError("psnr peak must be > 0");
  const auto sa = a.samples(), sb = b.samples();
  double sse = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = static_cast<double>(sa[i]) - sb[i];
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrInfinite;
  const double mse = sse / static_cast<double>(sa.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& a, const Image& b, const SsimParams& p) {
  require_same_shape(a, b, "ssim");
  if (a.width() < p.window || a.height() < p.window) {
    throw MetricError("ssim needs at least " + std::to_string(p.window) + "x" +
                      std::to_string(p.window) + " pixels, got " + std::to_string(a.width()) +
                      "x" + std::to_string(a.height()));
  }
  const auto kernel = gaussian_window(p);
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    total += ssim_plane(a.plane(c), b.plane(c), a.width(), a.height(), kernel, p);
  }
  return total / a.channels();
}

Image upsample_for_metric(const Image& lowres, int target_width, int target_height) {
  if (target_width % lowres.width() != 0 || target_height % lowres.height() != 0 ||
      target_width / lowres.width() != target_height / lowres.height()) {
    throw ContractError("upsample_for_metric: " + std::to_string(target_width) + "x" +
                        std::to_string(target_height) + " is not an integer multiple of " +
                        std::to_string(lowres.width()) + "x" + std::to_string(lowres.height()));
  }
  return super_resolve(lowres, SrOp{SrKind::Bicubic, target_width / lowres.width(), nullptr});
}

QualityScore evaluate(const Image& test, const Image& reference, const MetricOptions& opt) {
  const Image t = prepare(test, opt);
  const Image r = prepare(reference, opt);
  return {psnr(t, r), ssim(t, r)};
}

}  // namespace cssr
