#include "cssr/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cssr/dct_quant.hpp"
#include "cssr/error.hpp"
#include "cssr/resample.hpp"

namespace cssr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_factor(int factor, const char* what) {
  if (factor < 1) {
    throw ConfigError(std::string(what) + " factor must be >= 1, got " +
                      std::to_string(factor));
  }
}

Image downsample_nearest(const Image& img, int f) {
  const int w = img.width() / f;
  const int h = img.height() / f;
  Image out(w, h, img.color_space());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(c, x, y) = img.at(c, x * f, y * f);
    }
  }
  return out;
}

Image upsample_nearest(const Image& img, int f) {
  Image out(img.width() * f, img.height() * f, img.color_space());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) out.at(c, x, y) = img.at(c, x / f, y / f);
    }
  }
  return out;
}

Image upsample_interp(const Image& img, int f, resample::Kernel kernel) {
  return resample::apply(img, resample::upsample_weights(img.width(), f, kernel),
                         resample::upsample_weights(img.height(), f, kernel));
}

// 4:2:0 chroma path: edge-pad to even size, 2x2 box average, quantize at
// half resolution, bilinear back up, crop.
std::vector<float> quantize_chroma_subsampled(std::span<const float> plane, int w, int h,
                                              const dct::QuantTable& table) {
  const int pw = w + (w & 1);
  const int ph = h + (h & 1);
  Image padded(pw, ph, ColorSpace::Gray);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      padded.at(0, x, y) =
          plane[static_cast<std::size_t>(std::min(y, h - 1)) * w + std::min(x, w - 1)];
    }
  }
  Image half = resample::apply(padded,
                               resample::downsample_weights(pw, 2, resample::Kernel::Box),
                               resample::downsample_weights(ph, 2, resample::Kernel::Box));
  Image quantized(half.width(), half.height(), ColorSpace::Gray,
                  dct::quantize_plane(half.plane(0), half.width(), half.height(), table));
  Image up = upsample_interp(quantized, 2, resample::Kernel::Triangle);

  std::vector<float> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(y) * w + x] = up.at(0, x, y);
  }
  return out;
}

Image dct_roundtrip(const Image& img, const DctQuant& op) {
  const auto luma_table = dct::scaled_table(dct::kLuminanceBase, op.quality);
  const int w = img.width();
  const int h = img.height();

  if (img.color_space() == ColorSpace::Gray) {
    return Image(w, h, ColorSpace::Gray, dct::quantize_plane(img.plane(0), w, h, luma_table));
  }
  if (img.color_space() != ColorSpace::Rgb) {
    throw ContractError("DCT compression expects RGB or Gray input");
  }

  const auto chroma_table = dct::scaled_table(dct::kChrominanceBase, op.quality);
  const Image ycc = rgb_to_ycbcr(img);
  std::vector<float> samples;
  samples.reserve(ycc.samples().size());
  for (int c = 0; c < 3; ++c) {
    std::vector<float> plane;
    if (c == 0) {
      plane = dct::quantize_plane(ycc.plane(0), w, h, luma_table);
    } else if (op.chroma_subsample) {
      plane = quantize_chroma_subsampled(ycc.plane(c), w, h, chroma_table);
    } else {
      plane = dct::quantize_plane(ycc.plane(c), w, h, chroma_table);
    }
    samples.insert(samples.end(), plane.begin(), plane.end());
  }
  return ycbcr_to_rgb(Image(w, h, ColorSpace::YCbCr, std::move(samples)));
}

}  // namespace

Image downsample(const Image& img, const DownsampleOp& op) {
  check_factor(op.factor, "downsample");
  if (img.width() % op.factor != 0 || img.height() % op.factor != 0) {
    throw ContractError("downsample: " + std::to_string(img.width()) + "x" +
                        std::to_string(img.height()) + " is not divisible by " +
                        std::to_string(op.factor));
  }
  if (op.factor == 1) return img;
  switch (op.kind) {
    case DownsampleKind::Nearest:
      return downsample_nearest(img, op.factor);
    case DownsampleKind::Bicubic:
      return resample::apply(
          img, resample::downsample_weights(img.width(), op.factor, resample::Kernel::CatmullRom),
          resample::downsample_weights(img.height(), op.factor, resample::Kernel::CatmullRom));
  }
  throw ContractError("unknown downsample kind");
}

void validate(const CompressOp& op) {
  std::visit(overloaded{
                 [](const IdentityCompress&) {},
                 [](const UniformQuant& q) {
                   if (!(q.step > 0.0f) || !std::isfinite(q.step)) {
                     throw ConfigError("uniform quantization step must be > 0");
                   }
                 },
                 [](const DctQuant& q) { dct::quality_scale(q.quality); },
             },
             op);
}

Image compress_roundtrip(const Image& img, const CompressOp& op) {
  validate(op);
  return std::visit(
      overloaded{
          [&](const IdentityCompress&) { return img; },
          [&](const UniformQuant& q) {
            Image out = img;
            const double step = q.step;
            for (float& v : out.samples()) {
              v = static_cast<float>(std::round(v / step) * step);
            }
            return out;
          },
          [&](const DctQuant& q) { return dct_roundtrip(img, q); },
      },
      op);
}

Image super_resolve(const Image& img, const SrOp& op) {
  check_factor(op.factor, "super-resolution");
  if (op.kind == SrKind::External) {
    if (!op.backend) throw ContractError("external SR requires a backend handle");
    Image out = op.backend->upscale(img, op.factor);
    if (out.width() != img.width() * op.factor || out.height() != img.height() * op.factor ||
        out.channels() != img.channels()) {
      throw BackendError(BackendErrorKind::Shape,
                         "backend returned " + std::to_string(out.width()) + "x" +
                             std::to_string(out.height()) + ", expected " +
                             std::to_string(img.width() * op.factor) + "x" +
                             std::to_string(img.height() * op.factor));
    }
    return out.retagged(img.color_space());
  }
  if (op.factor == 1) return img;
  switch (op.kind) {
    case SrKind::Nearest: return upsample_nearest(img, op.factor);
    case SrKind::Bilinear: return upsample_interp(img, op.factor, resample::Kernel::Triangle);
    case SrKind::Bicubic: return upsample_interp(img, op.factor, resample::Kernel::CatmullRom);
    case SrKind::External: break;
  }
  throw ContractError("unknown SR kind");
}

void OperatorChain::validate() const {
  check_factor(ds.factor, "downsample");
  check_factor(sr.factor, "super-resolution");
  if (ds.factor != sr.factor) {
    throw ConfigError("downsample factor " + std::to_string(ds.factor) +
                      " differs from SR factor " + std::to_string(sr.factor));
  }
  cssr::validate(cp);
  if (sr.kind == SrKind::External && !sr.backend) {
    throw ConfigError("external SR configured without a backend");
  }
}

Image degrade(const Image& img, const OperatorChain& chain) {
  return compress_roundtrip(downsample(img, chain.ds), chain.cp);
}

Image reconstruct(const Image& img, const OperatorChain& chain) {
  return super_resolve(degrade(img, chain), chain.sr);
}

std::string to_string(DownsampleKind kind) {
  return kind == DownsampleKind::Nearest ? "nearest" : "bicubic";
}

std::string to_string(SrKind kind) {
  switch (kind) {
    case SrKind::Nearest: return "nearest";
    case SrKind::Bilinear: return "bilinear";
    case SrKind::Bicubic: return "bicubic";
    case SrKind::External: return "external";
  }
  return "?";
}

std::string to_string(const CompressOp& op) {
  return std::visit(overloaded{
                        [](const IdentityCompress&) { return std::string("identity"); },
                        [](const UniformQuant& q) {
                          std::ostringstream s;
                          s.precision(9);
                          s << "uniform:" << q.step;
                          return s.str();
                        },
                        [](const DctQuant& q) {
                          return "dct:" + std::to_string(q.quality) +
                                 ",sub=" + (q.chroma_subsample ? "true" : "false");
                        },
                    },
                    op);
}

}  // namespace cssr
