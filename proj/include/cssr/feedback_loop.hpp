#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "cssr/image.hpp"
#include "cssr/operators.hpp"

namespace cssr {

struct InitFromSerial {};
struct InitZero {};
struct InitRandom {
  std::uint64_t seed = 0;
};
using LoopInit = std::variant<InitFromSerial, InitZero, InitRandom>;

struct LoopConfig {
  double lambda = 0.1;
  int iterations = 10;
  LoopInit init = InitFromSerial{};
  bool clamp_each_iter = false;
  std::optional<double> early_stop_tol;

  void validate() const;
};

struct SerialResult {
  Image x_d0;  // DS(x_h0)
  Image x_c0;  // CP(x_d0)
  Image x_s0;  // SR(x_c0)
};

/// Per-iteration diagnostics. Entry n holds the error vector that drove update
/// n (measured before it was applied); `final_residual_l2` is measured on the
/// returned estimate before the output clamp.
struct LoopTrace {
  std::vector<double> residual_l2;
  std::vector<double> control_l2;
  std::vector<double> psnr_vs_reference;  // empty unless a reference is given
  int iterations_run = 0;
  double initial_residual_l2 = 0.0;
  double final_residual_l2 = 0.0;
};

struct IterationState {
  int iteration;            // 1-based
  const Image& estimate;    // x_h after the update
  const Image& error;       // x_e that drove the update
};

struct RefineHooks {
  const Image* reference = nullptr;  // ground truth, fills psnr_vs_reference
  std::function<void(const IterationState&)> on_iteration;
};

/// Residual norm growth (relative to the first one) that aborts the loop.
inline constexpr double kDivergenceFactor = 10.0;

SerialResult serial_pipeline(const Image& x_h0, const OperatorChain& chain);

/// x_e = x_s0 - SR(CP(DS(x_h))), unclamped.
Image residual(const Image& x_s0, const Image& x_h, const OperatorChain& chain);

/// Closed-loop refinement x_h <- x_h + lambda * residual(x_s0, x_h).
/// Output is clamped to [0,1] once at the end.
std::pair<Image, LoopTrace> circular_refine(const Image& x_s0, const OperatorChain& chain,
                                            const LoopConfig& cfg, const RefineHooks& hooks = {});

/// Starting point for the loop when only the compressed observation exists.
std::pair<Image, LoopTrace> run_cswin2sr(const Image& x_c0, const OperatorChain& chain,
                                         const LoopConfig& cfg, const RefineHooks& hooks = {});

/// Uniform [0,1) image from a 64-bit seed; identical across runs and platforms.
Image random_image(int width, int height, ColorSpace cs, std::uint64_t seed);

}  // namespace cssr
