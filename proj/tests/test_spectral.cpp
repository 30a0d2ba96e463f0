#include <gtest/gtest.h>

#include <chibsel/spectral.hpp>

#include "support.hpp"

namespace chibsel {
namespace {

using testing::direct_dft;
using testing::random_field;

double energy(const RealField& f) {
  double e = 0.0;
  for (double v : f.values) e += v * v;
  return e;
}

double energy(const Spectrum& s) {
  double e = 0.0;
  for (const auto& c : s.coeffs) e += std::norm(c);
  return e;
}

TEST(Spectral, ConstantFieldIsDcOnly) {
  const auto g = build_grid(2, 2);
  const Spectrum s = forward_dft(RealField(2, 2, 1.0), g);
  EXPECT_NEAR(s[0].real(), 2.0, 1e-15);
  EXPECT_NEAR(s[0].imag(), 0.0, 1e-15);
  for (std::size_t p = 1; p < 4; ++p) EXPECT_NEAR(std::abs(s[p]), 0.0, 1e-15);
}

TEST(Spectral, ZeroFieldGivesZeroSpectrum) {
  const auto g = build_grid(4, 6);
  const Spectrum s = forward_dft(RealField(4, 6, 0.0), g);
  for (const auto& c : s.coeffs) EXPECT_EQ(std::abs(c), 0.0);
}

TEST(Spectral, Parseval) {
  const auto g = build_grid(8, 8);
  const RealField f = random_field(8, 8, 11);
  const double ef = energy(f);
  EXPECT_LE(std::abs(ef - energy(forward_dft(f, g))), 1e-12 * ef);
  const auto g2 = build_grid(16, 10);
  const RealField f2 = random_field(16, 10, 12, 7.0);
  EXPECT_LE(std::abs(energy(f2) - energy(forward_dft(f2, g2))), 1e-10 * energy(f2));
}

TEST(Spectral, MatchesDirectSummation) {
  const auto g = build_grid(6, 4);
  const RealField f = random_field(6, 4, 5);
  const Spectrum fast = forward_dft(f, g);
  const Spectrum slow = direct_dft(f);
  for (std::size_t p = 0; p < g.size(); ++p) EXPECT_LT(std::abs(fast[p] - slow[p]), 1e-12);
}

TEST(Spectral, RoundTrip) {
  const auto g = build_grid(16, 16);
  const RealField f = random_field(16, 16, 3);
  const RealField back = inverse_dft(forward_dft(f, g), g);
  double worst = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) worst = std::max(worst, std::abs(back[p] - f[p]));
  EXPECT_LT(worst, 1e-12);
}

TEST(Spectral, DcOnlySpectrumInvertsToConstant) {
  const auto g = build_grid(4, 4);
  Spectrum s(4, 4);
  s[0] = Complex(3.0, 0.0);
  const RealField f = inverse_dft(s, g);
  for (double v : f.values) EXPECT_NEAR(v, 3.0 / 4.0, 1e-15);
}

TEST(Spectral, NonHermitianSpectrumRejected) {
  const auto g = build_grid(4, 4);
  Spectrum s = forward_dft(random_field(4, 4, 8), g);
  s[1] += Complex(0.0, 1e-3 * std::abs(s[1]) + 1e-3);
  EXPECT_THROW(inverse_dft(s, g), SymmetryError);
}

TEST(Spectral, Linearity) {
  const auto g = build_grid(8, 6);
  const RealField f = random_field(8, 6, 1);
  const RealField h = random_field(8, 6, 2);
  const double a = 1.7;
  const double b = -0.3;
  RealField mix(8, 6);
  for (std::size_t p = 0; p < mix.size(); ++p) mix[p] = a * f[p] + b * h[p];
  const Spectrum sm = forward_dft(mix, g);
  const Spectrum sf = forward_dft(f, g);
  const Spectrum sh = forward_dft(h, g);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const Complex want = a * sf[p] + b * sh[p];
    EXPECT_LE(std::abs(sm[p] - want), 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST(Spectral, RealFieldTransformIsHermitian) {
  const auto g = build_grid(12, 8);
  const Spectrum s = forward_dft(random_field(12, 8, 4), g);
  EXPECT_LE(hermitian_residual(s, g), 1e-10);
  double scale = 0.0;
  for (const auto& c : s.coeffs) scale = std::max(scale, std::abs(c));
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (is_self_conjugate(p, g)) {
      EXPECT_LE(std::abs(s[p].imag()), 1e-10 * scale);
    }
  }
}

TEST(Spectral, DimensionMismatchIsConfigError) {
  const auto g = build_grid(4, 4);
  EXPECT_THROW(forward_dft(RealField(4, 2), g), ConfigError);
  EXPECT_THROW(inverse_dft(Spectrum(2, 4), g), ConfigError);
}

TEST(FrequencyGrid, IndexConvention) {
  const auto g = build_grid(4, 4);
  const std::vector<double> want = {0.0, 0.25, -0.5, -0.25};
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(g.nu_h[g.index(c, 0)], want[c]);
    EXPECT_EQ(g.nu_v[g.index(0, c)], want[c]);
  }
  const auto g2 = build_grid(2, 2);
  EXPECT_EQ(g2.nu_h[0], 0.0);
  EXPECT_EQ(g2.nu_h[1], -0.5);
  EXPECT_EQ(g2.nu_v[2], -0.5);
  EXPECT_EQ(g.nu_h[0], 0.0);
  EXPECT_EQ(g.nu_v[0], 0.0);
}

TEST(FrequencyGrid, RejectsOddOrDegenerate) {
  EXPECT_THROW(build_grid(3, 4), ConfigError);
  EXPECT_THROW(build_grid(4, 5), ConfigError);
  EXPECT_THROW(build_grid(0, 4), ConfigError);
}

TEST(FrequencyGrid, ConjugatePartner) {
  const auto g = build_grid(4, 4);
  EXPECT_EQ(conjugate_partner(0, g), 0u);
  EXPECT_EQ(conjugate_partner(g.index(1, 0), g), g.index(3, 0));

  const auto g8 = build_grid(8, 8);
  for (std::size_t p = 0; p < g8.size(); ++p) {
    const std::size_t q = conjugate_partner(p, g8);
    EXPECT_EQ(conjugate_partner(q, g8), p);
    const double dh = std::remainder(g8.nu_h[p] + g8.nu_h[q], 1.0);
    const double dv = std::remainder(g8.nu_v[p] + g8.nu_v[q], 1.0);
    EXPECT_EQ(dh, 0.0);
    EXPECT_EQ(dv, 0.0);
  }
}

TEST(FrequencyGrid, FourSelfConjugateBins) {
  for (auto [w, h] : {std::pair<std::size_t, std::size_t>{2, 2}, {8, 8}, {6, 10}, {128, 64}}) {
    const auto g = build_grid(w, h);
    std::size_t n = 0;
    for (std::size_t p = 0; p < g.size(); ++p) n += is_self_conjugate(p, g) ? 1 : 0;
    EXPECT_EQ(n, 4u) << w << "x" << h;
  }
}

}  // namespace
}  // namespace chibsel
