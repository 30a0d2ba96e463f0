#pragma once
// Synthetic ground truth and observations drawn from a candidate model.

#include <cmath>
#include <cstdint>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "random.hpp"
#include "spectral.hpp"

namespace chibsel {

struct TruthConfig {
  double gamma_x_true = 6.0;
  double gamma_e_true = 4.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(gamma_x_true > 0.0) || !(gamma_e_true > 0.0)) {
      throw ConfigError("true precisions must be positive");
    }
  }
};

// Stream tags under TruthConfig::seed.
inline constexpr std::uint64_t kImageStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;

/// Hermitian complex Gaussian spectrum with per-bin variance psd(p) / precision.
/// Self-conjugate bins are real; pair bins split the variance evenly between
/// the real and imaginary parts.
inline Spectrum colored_spectrum(const std::vector<double>& psd, double precision,
                                 const FrequencyGrid& grid, Rng& rng) {
  Spectrum s(grid.width, grid.height);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const std::size_t q = conjugate_partner(p, grid);
    if (q < p) continue;
    const double var = psd[p] / precision;
    if (q == p) {
      s[p] = Complex(std::sqrt(var) * rng.normal(), 0.0);
    } else {
      const double sd = std::sqrt(0.5 * var);
      const double re = sd * rng.normal();
      const double im = sd * rng.normal();
      s[p] = Complex(re, im);
      s[q] = Complex(re, -im);
    }
  }
  return s;
}

/// x ~ N(0, C_x / gamma_x*).
inline RealField generate_image(const ModelSpec& model, const TruthConfig& truth) {
  truth.validate();
  Rng rng(derive_seed({truth.seed, kImageStream}));
  return inverse_dft(colored_spectrum(model.image_psd.s, truth.gamma_x_true, model.grid, rng),
                     model.grid);
}

/// y = H x + e with e ~ N(0, C_e / gamma_e*). An infinite gamma_e* gives y = H x.
inline RealField generate_observation(const RealField& x, const ModelSpec& model,
                                      const TruthConfig& truth) {
  truth.validate();
  if (x.size() != model.size()) throw UsageError("generate_observation: image does not match model grid");
  Spectrum xh = forward_dft(x, model.grid);
  for (std::size_t p = 0; p < xh.size(); ++p) xh[p] *= model.blur.s_h[p];
  // Exact conjugate symmetry of s_h * x^ may be lost to rounding in the blur.
  for (std::size_t p = 0; p < xh.size(); ++p) {
    const std::size_t q = conjugate_partner(p, model.grid);
    if (q > p) {
      const Complex avg = 0.5 * (xh[p] + std::conj(xh[q]));
      xh[p] = avg;
      xh[q] = std::conj(avg);
    } else if (q == p) {
      xh[p] = Complex(xh[p].real(), 0.0);
    }
  }
  RealField y = inverse_dft(xh, model.grid);
  if (std::isinf(truth.gamma_e_true)) return y;
  Rng rng(derive_seed({truth.seed, kNoiseStream}));
  const RealField e =
      inverse_dft(colored_spectrum(model.noise_psd.s, truth.gamma_e_true, model.grid, rng), model.grid);
  for (std::size_t p = 0; p < y.size(); ++p) y[p] += e[p];
  return y;
}

}  // namespace chibsel
