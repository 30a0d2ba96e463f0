#pragma once
// Shared fixtures and independent reference computations for the test suites.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <chibsel/model.hpp>
#include <chibsel/psd.hpp>
#include <chibsel/random.hpp>
#include <chibsel/spectral.hpp>

namespace chibsel::testing {

inline RealField random_field(std::size_t w, std::size_t h, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  RealField f(w, h);
  for (auto& v : f.values) v = scale * rng.normal();
  return f;
}

/// Unitary DFT by direct summation, O(P^2).
inline Spectrum direct_dft(const RealField& f) {
  const std::size_t W = f.width;
  const std::size_t H = f.height;
  const double P = static_cast<double>(W * H);
  Spectrum s(W, H);
  for (std::size_t kr = 0; kr < H; ++kr) {
    for (std::size_t kc = 0; kc < W; ++kc) {
      std::complex<double> acc = 0.0;
      for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
          const double ph = -2.0 * std::numbers::pi *
                            (static_cast<double>(kc * c) / static_cast<double>(W) +
                             static_cast<double>(kr * r) / static_cast<double>(H));
          acc += f[r * W + c] * std::complex<double>(std::cos(ph), std::sin(ph));
        }
      }
      s[kr * W + kc] = acc / std::sqrt(P);
    }
  }
  return s;
}

/// Direct circular convolution (h * x)(p) = sum_q h(p - q) x(q).
inline RealField circular_convolve(const RealField& h, const RealField& x) {
  const std::size_t W = x.width;
  const std::size_t H = x.height;
  RealField out(W, H);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      double acc = 0.0;
      for (std::size_t qr = 0; qr < H; ++qr) {
        for (std::size_t qc = 0; qc < W; ++qc) {
          acc += h[((r + H - qr) % H) * W + (c + W - qc) % W] * x[qr * W + qc];
        }
      }
      out[r * W + c] = acc;
    }
  }
  return out;
}

inline std::vector<PsdKind> all_kinds(double omega = kDefaultOmega) {
  std::vector<PsdKind> k;
  for (PsdFamily f : kAllFamilies) k.push_back(PsdKind{f, omega, false});
  return k;
}

inline ModelCatalog full_catalog(std::size_t w, std::size_t h, bool sinc_blur = false,
                                 double blur_width = 2.0) {
  const FrequencyGrid g = build_grid(w, h);
  const BlurTransfer b = sinc_blur ? sinc_blur_transfer(blur_width, g) : identity_blur(g);
  return build_catalog(all_kinds(), all_kinds(), b, HyperPrior{}, g);
}

}  // namespace chibsel::testing
