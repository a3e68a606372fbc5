#include "cssr/feedback_loop.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "cssr/error.hpp"
#include "cssr/metrics.hpp"

namespace cssr {

namespace {

std::string describe_lambda(double lambda) {
  std::ostringstream s;
  s << "lambda=" << lambda;
  return s.str();
}

// Re-raise operator failures with the iteration that triggered them.
template <class F>
auto at_iteration(int n, F&& step) {
  const std::string prefix = "iteration " + std::to_string(n) + ": ";
  try {
    return step();
  } catch (const BackendError& e) {
    throw BackendError(e.kind(), prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const ContractError& e) {
    throw ContractError(prefix + e.what());
  }
}

Image initial_estimate(const Image& x_s0, const LoopInit& init) {
  if (std::holds_alternative<InitZero>(init)) {
    return Image(x_s0.width(), x_s0.height(), x_s0.color_space(), 0.0f);
  }
  if (const auto* r = std::get_if<InitRandom>(&init)) {
    return random_image(x_s0.width(), x_s0.height(), x_s0.color_space(), r->seed);
  }
  return x_s0;
}

}  // namespace

void LoopConfig::validate() const {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw ConfigError("lambda must be in (0, 1], got " + std::to_string(lambda));
  }
  if (iterations < 0) {
    throw ConfigError("iteration count must be >= 0, got " + std::to_string(iterations));
  }
  if (early_stop_tol && !(*early_stop_tol >= 0.0)) {
    throw ConfigError("early-stop tolerance must be >= 0");
  }
}

Image random_image(int width, int height, ColorSpace cs, std::uint64_t seed) {
  Image out(width, height, cs);
  std::mt19937_64 gen(seed);
  for (float& v : out.samples()) {
    v = static_cast<float>(gen() >> 40) * 0x1.0p-24f;  // 24 random mantissa bits
  }
  return out;
}

SerialResult serial_pipeline(const Image& x_h0, const OperatorChain& chain) {
  chain.validate();
  SerialResult r;
  r.x_d0 = downsample(x_h0, chain.ds);
  r.x_c0 = compress_roundtrip(r.x_d0, chain.cp);
  r.x_s0 = super_resolve(r.x_c0, chain.sr);
  return r;
}

Image residual(const Image& x_s0, const Image& x_h, const OperatorChain& chain) {
  require_same_shape(x_s0, x_h, "residual");
  return subtract(x_s0, reconstruct(x_h, chain));
}

std::pair<Image, LoopTrace> circular_refine(const Image& x_s0, const OperatorChain& chain,
                                            const LoopConfig& cfg, const RefineHooks& hooks) {
  cfg.validate();
  chain.validate();
  if (x_s0.width() % chain.factor() != 0 || x_s0.height() % chain.factor() != 0) {
    throw ContractError("circular_refine: set-point dimensions are not divisible by " +
                        std::to_string(chain.factor()));
  }
  if (hooks.reference) require_same_shape(*hooks.reference, x_s0, "circular_refine reference");

  const float lambda = static_cast<float>(cfg.lambda);
  LoopTrace trace;
  Image x_h = initial_estimate(x_s0, cfg.init);
  Image x_e = at_iteration(0, [&] { return residual(x_s0, x_h, chain); });
  double norm = l2_norm(x_e);
  trace.initial_residual_l2 = norm;

  const auto stop_early = [&](double n) { return cfg.early_stop_tol && n <= *cfg.early_stop_tol; };

  for (int n = 1; n <= cfg.iterations && !stop_early(norm); ++n) {
    trace.residual_l2.push_back(norm);
    trace.control_l2.push_back(cfg.lambda * norm);

    add_scaled(x_h, lambda, x_e);
    if (cfg.clamp_each_iter) x_h = clamped(x_h);
    trace.iterations_run = n;
    if (hooks.reference) trace.psnr_vs_reference.push_back(psnr(clamped(x_h), *hooks.reference));
    if (hooks.on_iteration) hooks.on_iteration(IterationState{n, x_h, x_e});

    x_e = at_iteration(n, [&] { return residual(x_s0, x_h, chain); });
    norm = l2_norm(x_e);
    if (!std::isfinite(norm) ||
        (trace.initial_residual_l2 > 0.0 && norm > kDivergenceFactor * trace.initial_residual_l2)) {
      throw DivergenceError("feedback loop diverged at iteration " + std::to_string(n) +
                            " with " + describe_lambda(cfg.lambda) + ": residual " +
                            std::to_string(norm) + " vs initial " +
                            std::to_string(trace.initial_residual_l2));
    }
  }
  trace.final_residual_l2 = norm;
  return {clamped(x_h), std::move(trace)};
}

std::pair<Image, LoopTrace> run_cswin2sr(const Image& x_c0, const OperatorChain& chain,
                                         const LoopConfig& cfg, const RefineHooks& hooks) {
  chain.validate();
  const Image x_s0 = super_resolve(x_c0, chain.sr);
  return circular_refine(x_s0, chain, cfg, hooks);
}

}  // namespace cssr
