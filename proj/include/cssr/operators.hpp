#pragma once

#include <memory>
#include <string>
#include <variant>

#include "cssr/image.hpp"

namespace cssr {

// ---- DS ---------------------------------------------------------------------

enum class DownsampleKind { Nearest, Bicubic };

struct DownsampleOp {
  DownsampleKind kind = DownsampleKind::Nearest;
  int factor = 4;
};

/// Nearest keeps the top-left sample of each factor x factor block. Bicubic
/// uses a Catmull-Rom kernel stretched by the factor. Dimensions must divide.
Image downsample(const Image& img, const DownsampleOp& op);

// ---- CP ---------------------------------------------------------------------

struct IdentityCompress {};

struct UniformQuant {
  float step = 1.0f / 255.0f;
};

struct DctQuant {
  int quality = 10;
  bool chroma_subsample = true;  // 4:2:0
};

using CompressOp = std::variant<IdentityCompress, UniformQuant, DctQuant>;

/// Lossy encode/decode round trip. Output has the input's shape and colour
/// space; nothing is clamped.
Image compress_roundtrip(const Image& img, const CompressOp& op);

void validate(const CompressOp& op);

// ---- SR ---------------------------------------------------------------------

/// Out-of-process super-resolution unit. One request in flight per instance.
class SrBackend {
 public:
  virtual ~SrBackend() = default;
  virtual Image upscale(const Image& img, int scale) = 0;
};

enum class SrKind { Nearest, Bilinear, Bicubic, External };

struct SrOp {
  SrKind kind = SrKind::Bicubic;
  int factor = 4;
  std::shared_ptr<SrBackend> backend;  // External only
};

Image super_resolve(const Image& img, const SrOp& op);

// ---- chain ------------------------------------------------------------------

struct OperatorChain {
  DownsampleOp ds;
  CompressOp cp;
  SrOp sr;

  int factor() const noexcept { return ds.factor; }

  /// Factors agree and are positive, CP parameters valid, External has a backend.
  void validate() const;
};

/// CP(DS(img)).
Image degrade(const Image& img, const OperatorChain& chain);

/// SR(CP(DS(img))), the composite the feedback loop re-applies every step.
Image reconstruct(const Image& img, const OperatorChain& chain);

std::string to_string(DownsampleKind kind);
std::string to_string(SrKind kind);
std::string to_string(const CompressOp& op);

}  // namespace cssr
