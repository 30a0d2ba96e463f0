#include <gtest/gtest.h>

#include <limits>

#include <chibsel/synth.hpp>

#include "support.hpp"

namespace chibsel {
namespace {

ModelSpec model_of(std::size_t n, PsdFamily image, PsdFamily noise, double blur_width) {
  const auto g = build_grid(n, n);
  const BlurTransfer b = blur_width > 0 ? sinc_blur_transfer(blur_width, g) : identity_blur(g);
  return make_model(1, PsdKind{image}, PsdKind{noise}, b, HyperPrior{}, g);
}

TEST(Synth, WhiteImageVariance) {
  const auto m = model_of(128, PsdFamily::White, PsdFamily::White, 0);
  const int reps = 20;
  std::vector<double> v(reps);
  for (int r = 0; r < reps; ++r) {
    const RealField x = generate_image(m, TruthConfig{6.0, 4.0, std::uint64_t(r)});
    double s = 0.0;
    for (double a : x.values) s += a * a;
    v[r] = s / double(x.size());
  }
  double mean = 0.0;
  for (double a : v) mean += a;
  mean /= reps;
  double var = 0.0;
  for (double a : v) var += (a - mean) * (a - mean);
  const double se = std::sqrt(var / (reps - 1) / reps);
  EXPECT_LE(std::abs(mean - 1.0 / 6.0), 5.0 * se);
}

TEST(Synth, InfinitePrecisionGivesZeroField) {
  const auto m = model_of(16, PsdFamily::Laplace, PsdFamily::White, 2.0);
  const RealField x = generate_image(m, TruthConfig{std::numeric_limits<double>::infinity(), 4.0, 1});
  for (double a : x.values) EXPECT_EQ(a, 0.0);
}

TEST(Synth, PeriodogramMatchesPsd) {
  const auto m = model_of(32, PsdFamily::Lorentz, PsdFamily::White, 0);
  const int reps = 100;
  const double gx = 6.0;
  std::vector<double> acc(m.size(), 0.0);
  for (int r = 0; r < reps; ++r) {
    const Spectrum xh = forward_dft(generate_image(m, TruthConfig{gx, 4.0, std::uint64_t(1000 + r)}), m.grid);
    for (std::size_t p = 0; p < m.size(); ++p) acc[p] += std::norm(xh[p]);
  }
  for (std::size_t p = 0; p < m.size(); ++p) {
    const double want = m.image_psd.s[p] / gx;
    // |x^|^2 is exponential for pair bins and a scaled chi-square(1) on self-conjugate bins.
    const double sd = is_self_conjugate(p, m.grid) ? std::sqrt(2.0) * want : want;
    EXPECT_LE(std::abs(acc[p] / reps - want), 5.0 * sd / std::sqrt(double(reps))) << "bin " << p;
  }
}

TEST(Synth, ColoredSpectrumIsHermitian) {
  const auto m = model_of(16, PsdFamily::Gauss, PsdFamily::White, 0);
  Rng rng(3);
  const Spectrum s = colored_spectrum(m.image_psd.s, 2.0, m.grid, rng);
  EXPECT_EQ(hermitian_residual(s, m.grid), 0.0);
}

TEST(Synth, NoiseFreeIdentityReturnsImage) {
  const auto m = model_of(16, PsdFamily::Laplace, PsdFamily::White, 0);
  const TruthConfig truth{6.0, std::numeric_limits<double>::infinity(), 5};
  const RealField x = generate_image(m, truth);
  const RealField y = generate_observation(x, m, truth);
  for (std::size_t p = 0; p < m.size(); ++p) EXPECT_NEAR(y[p], x[p], 1e-12);
}

TEST(Synth, SignalToNoiseRatio) {
  const auto m = model_of(32, PsdFamily::Laplace, PsdFamily::Gauss, 2.0);
  const double gx = 6.0;
  const double ge = 4.0;
  double signal = 0.0;
  double noise = 0.0;
  for (int r = 0; r < 200; ++r) {
    const TruthConfig truth{gx, ge, std::uint64_t(50 + r)};
    const RealField x = generate_image(m, truth);
    const RealField hx = generate_observation(x, m, TruthConfig{gx, std::numeric_limits<double>::infinity(), truth.seed});
    const RealField y = generate_observation(x, m, truth);
    for (std::size_t p = 0; p < m.size(); ++p) {
      signal += hx[p] * hx[p];
      noise += (y[p] - hx[p]) * (y[p] - hx[p]);
    }
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t p = 0; p < m.size(); ++p) {
    num += m.blur.gain2[p] * m.image_psd.s[p] / gx;
    den += m.noise_psd.s[p] / ge;
  }
  EXPECT_NEAR((signal / noise) / (num / den), 1.0, 0.10);
}

TEST(Synth, DeterministicPerSeed) {
  const auto m = model_of(16, PsdFamily::Gauss, PsdFamily::Laplace, 2.5);
  const TruthConfig truth{6.0, 4.0, 77};
  const RealField a = generate_observation(generate_image(m, truth), m, truth);
  const RealField b = generate_observation(generate_image(m, truth), m, truth);
  EXPECT_EQ(a.values, b.values);
  const TruthConfig other{6.0, 4.0, 78};
  EXPECT_NE(a.values, generate_observation(generate_image(m, other), m, other).values);
}

TEST(Synth, RejectsBadTruth) {
  const auto m = model_of(8, PsdFamily::White, PsdFamily::White, 0);
  EXPECT_THROW(generate_image(m, TruthConfig{0.0, 4.0, 1}), ConfigError);
  EXPECT_THROW(generate_observation(RealField(8, 8), m, TruthConfig{6.0, -1.0, 1}), ConfigError);
  EXPECT_THROW(generate_observation(RealField(4, 4), m, TruthConfig{}), UsageError);
}

}  // namespace
}  // namespace chibsel
