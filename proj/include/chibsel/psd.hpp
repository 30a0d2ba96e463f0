#pragma once
// Power spectral density families and blur transfer functions on a grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "spectral.hpp"

namespace chibsel {

enum class PsdFamily { Lorentz, Gauss, Laplace, White };

inline constexpr std::array<PsdFamily, 4> kAllFamilies = {PsdFamily::Lorentz, PsdFamily::Gauss,
                                                          PsdFamily::Laplace, PsdFamily::White};

inline constexpr double kDefaultOmega = 0.05;
inline constexpr double kPsdRelativeFloor = 1e-12;

inline std::string_view family_name(PsdFamily f) {
  switch (f) {
    case PsdFamily::Lorentz: return "Lorentz";
    case PsdFamily::Gauss: return "Gauss";
    case PsdFamily::Laplace: return "Laplace";
    case PsdFamily::White: return "White";
  }
  return "?";
}

inline PsdFamily parse_family(std::string_view name) {
  for (PsdFamily f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown PSD kind '" + std::string(name) +
                    "' (expected Lorentz, Gauss, Laplace or White)");
}

struct PsdKind {
  PsdFamily family = PsdFamily::White;
  double omega = kDefaultOmega;  // ignored for White
  // Gauss only: use nu_h^2 + nu_v^2 instead of (nu_h + nu_v)^2 in the exponent.
  bool gauss_isotropic = false;

  [[nodiscard]] std::string label() const { return std::string(family_name(family)); }
};

struct PsdField {
  PsdKind kind;
  std::vector<double> s;

  [[nodiscard]] std::size_t size() const { return s.size(); }
  double operator[](std::size_t p) const { return s[p]; }
};

/// Unclamped family formula at one frequency.
inline double psd_formula(const PsdKind& kind, double nh, double nv) {
  using std::numbers::pi;
  const double w = kind.omega;
  switch (kind.family) {
    case PsdFamily::Lorentz: {
      const double a = nh / w;
      const double b = nv / w;
      return 1.0 / ((pi * w * w) * (1.0 + a * a) * (1.0 + b * b));
    }
    case PsdFamily::Gauss: {
      const double q = kind.gauss_isotropic ? nh * nh + nv * nv : (nh + nv) * (nh + nv);
      return std::exp(-q / (2.0 * w * w)) / (2.0 * pi * w * w);
    }
    case PsdFamily::Laplace:
      return std::exp(-(std::abs(nh) + std::abs(nv)) / w) / (4.0 * w * w);
    case PsdFamily::White:
      return 1.0;
  }
  return 1.0;
}

/// Evaluates the family on every bin. On the Nyquist lines the frequency -1/2
/// aliases +1/2, so those bins take the mean of the formula over both
/// representatives; this keeps s(p) == s(conjugate_partner(p)) for formulas
/// that are only even under joint negation. Values are clamped below at
/// kPsdRelativeFloor * max.
inline PsdField evaluate_psd(const PsdKind& kind, const FrequencyGrid& grid) {
  if (kind.family != PsdFamily::White && !(kind.omega > 0.0 && std::isfinite(kind.omega))) {
    throw ConfigError("PSD bandwidth omega must be positive, got " + std::to_string(kind.omega));
  }
  PsdField field{kind, std::vector<double>(grid.size())};
  double peak = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double nh = grid.nu_h[p];
    const double nv = grid.nu_v[p];
    const bool nyq_h = nh == -0.5;
    const bool nyq_v = nv == -0.5;
    double v = psd_formula(kind, nh, nv);
    if (nyq_h && nyq_v) {
      v = 0.25 * (v + psd_formula(kind, -nh, nv) + psd_formula(kind, nh, -nv) +
                  psd_formula(kind, -nh, -nv));
    } else if (nyq_h) {
      v = 0.5 * (v + psd_formula(kind, -nh, nv));
    } else if (nyq_v) {
      v = 0.5 * (v + psd_formula(kind, nh, -nv));
    }
    field.s[p] = v;
    peak = std::max(peak, v);
  }
  const double floor = kPsdRelativeFloor * peak;
  for (double& v : field.s) v = std::max(v, floor);
  return field;
}

/// Transfer function of a circular convolution operator: (Hx)^ = s_h * x^.
struct BlurTransfer {
  std::vector<Complex> s_h;
  std::vector<double> gain2;
  std::string description = "identity";

  [[nodiscard]] std::size_t size() const { return s_h.size(); }
};

inline BlurTransfer identity_blur(const FrequencyGrid& grid) {
  return BlurTransfer{std::vector<Complex>(grid.size(), Complex(1.0, 0.0)),
                      std::vector<double>(grid.size(), 1.0), "identity"};
}

/// Blur from a spatial impulse response whose origin is pixel (0,0) with
/// circular wrap. The response is used as given (no renormalization).
inline BlurTransfer blur_from_psf(const RealField& psf, const FrequencyGrid& grid,
                                  std::string description = "psf") {
  Spectrum sh = forward_dft(psf, grid);
  const double root_p = std::sqrt(static_cast<double>(grid.size()));
  BlurTransfer b;
  b.description = std::move(description);
  b.s_h.resize(grid.size());
  b.gain2.resize(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    b.s_h[p] = sh[p] * root_p;
    b.gain2[p] = std::norm(b.s_h[p]);
  }
  return b;
}

inline double sinc(double t) {
  if (t == 0.0) return 1.0;
  if (t == std::round(t)) return 0.0;
  const double x = std::numbers::pi * t;
  return std::sin(x) / x;
}

/// Separable sinc(m/w) sinc(n/w) impulse response on the periodic grid,
/// normalized to unit sum. s_h(DC) equals the sum of the response.
inline BlurTransfer sinc_blur_transfer(double width_param, const FrequencyGrid& grid) {
  if (!(width_param > 0.0) || !std::isfinite(width_param)) {
    throw ConfigError("sinc blur width must be positive");
  }
  auto centered = [](std::size_t i, std::size_t n) {
    return i < n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
  };
  std::vector<double> hx(grid.width);
  std::vector<double> hy(grid.height);
  for (std::size_t c = 0; c < grid.width; ++c) hx[c] = sinc(centered(c, grid.width) / width_param);
  for (std::size_t r = 0; r < grid.height; ++r) hy[r] = sinc(centered(r, grid.height) / width_param);
  RealField psf(grid.width, grid.height);
  double total = 0.0;
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) {
      psf[grid.index(c, r)] = hx[c] * hy[r];
      total += hx[c] * hy[r];
    }
  }
  if (!(std::abs(total) > 0.0)) throw ConfigError("sinc blur response sums to zero");
  for (double& v : psf.values) v /= total;
  return blur_from_psf(psf, grid, "sinc(w=" + std::to_string(width_param) + ")");
}

}  // namespace chibsel
