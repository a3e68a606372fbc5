#include <gtest/gtest.h>

#include <cmath>

#include "cssr/error.hpp"
#include "cssr/feedback_loop.hpp"
#include "test_util.hpp"

using namespace cssr;

namespace {

OperatorChain identity_chain() {
  return {{DownsampleKind::Nearest, 1}, IdentityCompress{}, {SrKind::Nearest, 1, nullptr}};
}

OperatorChain nearest_chain(int f) {
  return {{DownsampleKind::Nearest, f}, IdentityCompress{}, {SrKind::Nearest, f, nullptr}};
}

// Linear but non-idempotent SR unit: nearest upscaling times a gain.
class GainBackend : public SrBackend {
 public:
  explicit GainBackend(float gain) : gain_(gain) {}
  Image upscale(const Image& img, int scale) override {
    return scaled(super_resolve(img, {SrKind::Nearest, scale, nullptr}), gain_);
  }

 private:
  float gain_;
};

class WrongShapeBackend : public SrBackend {
 public:
  Image upscale(const Image& img, int) override { return img; }
};

}  // namespace

TEST(Serial, IdentityChainIsBitExact) {
  const Image x = fixtures::noise_image(8, 8, ColorSpace::Rgb, 1);
  const SerialResult r = serial_pipeline(x, identity_chain());
  EXPECT_EQ(r.x_d0, x);
  EXPECT_EQ(r.x_c0, x);
  EXPECT_EQ(r.x_s0, x);
}

TEST(Serial, NearestTwoByTwo) {
  Image x(2, 2, ColorSpace::Gray, std::vector<float>{0.1f, 0.2f, 0.3f, 0.4f});
  const SerialResult r = serial_pipeline(x, nearest_chain(2));
  for (float v : r.x_s0.samples()) EXPECT_EQ(v, 0.1f);
}

TEST(Serial, MatchesSeparateOperators) {
  const OperatorChain chain{{DownsampleKind::Bicubic, 4}, DctQuant{10, true},
                            {SrKind::Bicubic, 4, nullptr}};
  const Image x = fixtures::smooth_image(32, 32, ColorSpace::Rgb, 2);
  EXPECT_EQ(serial_pipeline(x, chain).x_s0, super_resolve(degrade(x, chain), chain.sr));
}

TEST(Residual, ZeroCases) {
  const Image x = fixtures::noise_image(8, 8, ColorSpace::Rgb, 3);
  EXPECT_EQ(l2_norm(residual(x, x, identity_chain())), 0.0);
  const OperatorChain chain{{DownsampleKind::Bicubic, 2}, DctQuant{20, true},
                            {SrKind::Bicubic, 2, nullptr}};
  EXPECT_EQ(l2_norm(residual(reconstruct(x, chain), x, chain)), 0.0);
  EXPECT_THROW(residual(x, Image(4, 4, ColorSpace::Rgb), chain), ContractError);
}

TEST(Residual, AffineForLinearChain) {
  // Direct evaluation of A = SR o DS for nearest f=2: each sample copies the
  // top-left sample of its 2x2 block.
  const auto apply_a = [](const Image& x) {
    Image out(x.width(), x.height(), x.color_space());
    for (int c = 0; c < x.channels(); ++c)
      for (int y = 0; y < x.height(); ++y)
        for (int i = 0; i < x.width(); ++i) out.at(c, i, y) = x.at(c, i - i % 2, y - y % 2);
    return out;
  };
  const OperatorChain chain = nearest_chain(2);
  const Image s0 = fixtures::noise_image(8, 6, ColorSpace::Rgb, 10);
  const Image x = fixtures::noise_image(8, 6, ColorSpace::Rgb, 11);
  const Image y = fixtures::noise_image(8, 6, ColorSpace::Rgb, 12);
  const float alpha = 0.7f, beta = -1.3f;
  Image combo = scaled(x, alpha);
  add_scaled(combo, beta, y);

  Image expected = s0;
  add_scaled(expected, -alpha, apply_a(x));
  add_scaled(expected, -beta, apply_a(y));
  EXPECT_LE(fixtures::max_abs_diff(residual(s0, combo, chain), expected), 1e-6);
}

TEST(Refine, IdentityChainIsFixedPoint) {
  const Image x_s0 = fixtures::noise_image(8, 8, ColorSpace::Rgb, 4);
  auto [x_h, trace] = circular_refine(x_s0, identity_chain(), {});
  EXPECT_EQ(x_h, x_s0);
  ASSERT_EQ(trace.residual_l2.size(), 10u);
  for (double r : trace.residual_l2) EXPECT_EQ(r, 0.0);
  EXPECT_EQ(trace.final_residual_l2, 0.0);
  EXPECT_EQ(trace.iterations_run, 10);
}

TEST(Refine, OneStepAlgebra) {
  const OperatorChain chain{{DownsampleKind::Bicubic, 2}, DctQuant{30, true},
                            {SrKind::Bicubic, 2, nullptr}};
  const Image x_s0 = reconstruct(fixtures::smooth_image(16, 16, ColorSpace::Rgb, 5), chain);
  const Image x0 = random_image(16, 16, ColorSpace::Rgb, 77);

  Image expected = x0;
  add_scaled(expected, 0.3f, subtract(x_s0, reconstruct(x0, chain)));
  expected = clamped(expected);

  LoopConfig cfg;
  cfg.lambda = 0.3;
  cfg.iterations = 1;
  cfg.init = InitRandom{77};
  const auto [x1, trace] = circular_refine(x_s0, chain, cfg);
  EXPECT_LE(fixtures::max_abs_diff(x1, expected), 1e-6);
}

TEST(Refine, GeometricDecay) {
  const OperatorChain chain = nearest_chain(4);
  for (double lambda : {0.1, 0.5, 1.0}) {
    for (std::uint32_t seed = 0; seed < 5; ++seed) {
      const Image x_s0 = serial_pipeline(fixtures::noise_image(32, 32, ColorSpace::Rgb, seed), chain).x_s0;
      LoopConfig cfg;
      cfg.lambda = lambda;
      cfg.init = InitZero{};
      const auto [x_h, trace] = circular_refine(x_s0, chain, cfg);
      std::vector<double> r = trace.residual_l2;
      r.push_back(trace.final_residual_l2);
      for (std::size_t n = 1; n < r.size(); ++n) {
        if (r[n - 1] == 0.0) {
          EXPECT_EQ(r[n], 0.0);
          continue;
        }
        EXPECT_NEAR(r[n] / r[n - 1], 1.0 - lambda, 1e-4 * std::max(1.0 - lambda, 1e-3))
            << "lambda " << lambda << " step " << n;
      }
      if (lambda == 1.0) EXPECT_LE(r[1], 1e-6);
      if (lambda == 0.1) {
        EXPECT_NEAR(trace.final_residual_l2 / trace.initial_residual_l2, std::pow(0.9, 10),
                    1e-4 * std::pow(0.9, 10));
      }
    }
  }
}

TEST(Refine, BruteForceIterationAtEightByEight) {
  const OperatorChain chain = nearest_chain(4);
  const Image x_s0 = serial_pipeline(fixtures::noise_image(8, 8, ColorSpace::Gray, 9), chain).x_s0;
  // Hand-rolled loop: e = s0 - A x with A reading the block's top-left sample.
  std::vector<double> x(64, 0.0), s(64);
  for (int i = 0; i < 64; ++i) s[i] = x_s0.samples()[i];
  for (int n = 0; n < 10; ++n) {
    std::vector<double> e(64);
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) e[j * 8 + i] = s[j * 8 + i] - x[(j - j % 4) * 8 + (i - i % 4)];
    for (int k = 0; k < 64; ++k) x[k] += 0.1 * e[k];
  }
  LoopConfig cfg;
  cfg.init = InitZero{};
  const auto [x_h, trace] = circular_refine(x_s0, chain, cfg);
  for (int k = 0; k < 64; ++k) EXPECT_NEAR(x_h.samples()[k], x[k], 1e-6);
}

TEST(Refine, SteadyStateIsBitExact) {
  const OperatorChain chain = nearest_chain(2);
  const Image x_s0 = serial_pipeline(fixtures::noise_image(8, 8, ColorSpace::Rgb, 6), chain).x_s0;
  LoopConfig cfg;
  cfg.lambda = 1.0;
  cfg.iterations = 1;
  cfg.init = InitZero{};
  const auto [one, t1] = circular_refine(x_s0, chain, cfg);
  cfg.iterations = 7;
  const auto [seven, t7] = circular_refine(x_s0, chain, cfg);
  EXPECT_EQ(t1.final_residual_l2, 0.0);
  EXPECT_EQ(one, seven);
}

TEST(Refine, ZeroIterationsReturnsInitialization) {
  const OperatorChain chain{{DownsampleKind::Bicubic, 4}, DctQuant{10, true},
                            {SrKind::Bicubic, 4, nullptr}};
  const Image x_s0 = serial_pipeline(fixtures::smooth_image(32, 32, ColorSpace::Rgb, 7), chain).x_s0;
  LoopConfig cfg;
  cfg.iterations = 0;
  const auto [x_h, trace] = circular_refine(x_s0, chain, cfg);
  EXPECT_EQ(x_h, clamped(x_s0));
  EXPECT_EQ(trace.iterations_run, 0);
  EXPECT_TRUE(trace.residual_l2.empty());
}

TEST(Refine, RandomInitIsDeterministic) {
  const OperatorChain chain{{DownsampleKind::Bicubic, 2}, DctQuant{10, true},
                            {SrKind::Bicubic, 2, nullptr}};
  const Image x_s0 = serial_pipeline(fixtures::smooth_image(16, 16, ColorSpace::Rgb, 8), chain).x_s0;
  LoopConfig cfg;
  cfg.init = InitRandom{42};
  const auto a = circular_refine(x_s0, chain, cfg);
  const auto b = circular_refine(x_s0, chain, cfg);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second.residual_l2, b.second.residual_l2);
  cfg.init = InitRandom{43};
  EXPECT_NE(circular_refine(x_s0, chain, cfg).first, a.first);
  EXPECT_EQ(random_image(4, 4, ColorSpace::Gray, 1), random_image(4, 4, ColorSpace::Gray, 1));
}

TEST(Refine, EarlyStop) {
  const OperatorChain chain = nearest_chain(2);
  const Image x_s0 = serial_pipeline(fixtures::noise_image(8, 8, ColorSpace::Rgb, 6), chain).x_s0;
  LoopConfig cfg;
  cfg.lambda = 0.5;
  cfg.iterations = 50;
  cfg.init = InitZero{};
  cfg.early_stop_tol = 1e-2;
  const auto [x_h, trace] = circular_refine(x_s0, chain, cfg);
  EXPECT_LT(trace.iterations_run, 50);
  EXPECT_LE(trace.final_residual_l2, 1e-2);
  EXPECT_GT(trace.residual_l2.back(), 1e-2);
}

TEST(Refine, ClampEachIterKeepsRange) {
  const OperatorChain chain = nearest_chain(2);
  const Image x_s0 = serial_pipeline(fixtures::noise_image(8, 8, ColorSpace::Rgb, 6), chain).x_s0;
  LoopConfig cfg;
  cfg.clamp_each_iter = true;
  cfg.init = InitRandom{1};
  RefineHooks hooks;
  bool in_range = true;
  hooks.on_iteration = [&](const IterationState& s) {
    for (float v : s.estimate.samples()) in_range = in_range && v >= 0.0f && v <= 1.0f;
  };
  circular_refine(x_s0, chain, cfg, hooks);
  EXPECT_TRUE(in_range);
}

TEST(Refine, ReferenceFillsPsnrTrace) {
  const OperatorChain chain = nearest_chain(2);
  const Image x_h0 = fixtures::noise_image(8, 8, ColorSpace::Rgb, 6);
  const Image x_s0 = serial_pipeline(x_h0, chain).x_s0;
  RefineHooks hooks;
  hooks.reference = &x_h0;
  LoopConfig cfg;
  cfg.iterations = 3;
  const auto [x_h, trace] = circular_refine(x_s0, chain, cfg, hooks);
  EXPECT_EQ(trace.psnr_vs_reference.size(), 3u);
}

TEST(Refine, DivergenceIsReported) {
  OperatorChain chain = nearest_chain(2);
  chain.sr = {SrKind::External, 2, std::make_shared<GainBackend>(-3.0f)};
  const Image x_s0 = fixtures::noise_image(8, 8, ColorSpace::Rgb, 6);
  LoopConfig cfg;
  cfg.lambda = 1.0;
  cfg.init = InitZero{};
  try {
    circular_refine(x_s0, chain, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos);
  }
}

TEST(Refine, BackendErrorsCarryIteration) {
  OperatorChain chain = nearest_chain(2);
  chain.sr = {SrKind::External, 2, std::make_shared<WrongShapeBackend>()};
  try {
    circular_refine(fixtures::noise_image(8, 8, ColorSpace::Rgb, 6), chain, {});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::Shape);
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos);
  }
}

TEST(Refine, ConfigValidation) {
  LoopConfig cfg;
  cfg.lambda = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.lambda = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.lambda = 0.1;
  cfg.iterations = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(circular_refine(Image(6, 6, ColorSpace::Gray), nearest_chain(4), {}),
               ContractError);
}

TEST(Cswin2sr, EqualsSeparateCalls) {
  const OperatorChain chain{{DownsampleKind::Bicubic, 2}, DctQuant{10, true},
                            {SrKind::Bicubic, 2, nullptr}};
  const Image x_c0 = degrade(fixtures::smooth_image(16, 16, ColorSpace::Rgb, 9), chain);
  const auto a = run_cswin2sr(x_c0, chain, {});
  const auto b = circular_refine(super_resolve(x_c0, chain.sr), chain, {});
  EXPECT_EQ(a.first, b.first);

  const Image x = fixtures::noise_image(8, 8, ColorSpace::Gray, 2);
  EXPECT_EQ(run_cswin2sr(x, identity_chain(), {}).first, x);
}
