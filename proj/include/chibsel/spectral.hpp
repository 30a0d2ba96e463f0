#pragma once
// Unitary 2-D DFT over row-major W x H fields and the frequency-grid
// bookkeeping that all circulant algebra in the library relies on.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "error.hpp"

namespace chibsel {

using Complex = std::complex<double>;

/// Normalized frequencies (cycles/pixel) of every flat index p = row * W + col.
/// nu_h follows the column index, nu_v the row index.
struct FrequencyGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> nu_h;
  std::vector<double> nu_v;

  [[nodiscard]] std::size_t size() const { return width * height; }
  [[nodiscard]] std::size_t col(std::size_t p) const { return p % width; }
  [[nodiscard]] std::size_t row(std::size_t p) const { return p / width; }
  [[nodiscard]] std::size_t index(std::size_t col, std::size_t row) const {
    return row * width + col;
  }
  [[nodiscard]] bool same_shape(std::size_t w, std::size_t h) const {
    return w == width && h == height;
  }
};

/// Image-domain samples, row-major.
struct RealField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  RealField() = default;
  RealField(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), values(w * h, fill) {}
  RealField(std::size_t w, std::size_t h, std::vector<double> v)
      : width(w), height(h), values(std::move(v)) {}

  [[nodiscard]] std::size_t size() const { return values.size(); }
  double& operator[](std::size_t p) { return values[p]; }
  double operator[](std::size_t p) const { return values[p]; }
};

/// Complex coefficients indexed like FrequencyGrid.
struct Spectrum {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Complex> coeffs;

  Spectrum() = default;
  Spectrum(std::size_t w, std::size_t h) : width(w), height(h), coeffs(w * h) {}

  [[nodiscard]] std::size_t size() const { return coeffs.size(); }
  Complex& operator[](std::size_t p) { return coeffs[p]; }
  const Complex& operator[](std::size_t p) const { return coeffs[p]; }
};

inline constexpr double kHermitianTolerance = 1e-10;

inline double frequency_of_index(std::size_t i, std::size_t n) {
  const std::size_t half = (n + 1) / 2;
  const double di = static_cast<double>(i);
  const double dn = static_cast<double>(n);
  return i < half ? di / dn : (di - dn) / dn;
}

inline FrequencyGrid build_grid(std::size_t width, std::size_t height) {
  if (width < 2 || height < 2 || width % 2 != 0 || height % 2 != 0) {
    throw ConfigError("grid dimensions must be even and >= 2, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  FrequencyGrid g;
  g.width = width;
  g.height = height;
  g.nu_h.resize(width * height);
  g.nu_v.resize(width * height);
  for (std::size_t r = 0; r < height; ++r) {
    const double fv = frequency_of_index(r, height);
    for (std::size_t c = 0; c < width; ++c) {
      g.nu_h[r * width + c] = frequency_of_index(c, width);
      g.nu_v[r * width + c] = fv;
    }
  }
  return g;
}

/// Flat index of the frequency (-nu_h, -nu_v) modulo 1.
inline std::size_t conjugate_partner(std::size_t p, const FrequencyGrid& grid) {
  const std::size_t c = grid.col(p);
  const std::size_t r = grid.row(p);
  return grid.index((grid.width - c) % grid.width, (grid.height - r) % grid.height);
}

inline bool is_self_conjugate(std::size_t p, const FrequencyGrid& grid) {
  return conjugate_partner(p, grid) == p;
}

/// max_p |s(p) - conj(s(partner(p)))| relative to max_p |s(p)|; 0 for a zero spectrum.
inline double hermitian_residual(const Spectrum& s, const FrequencyGrid& grid) {
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    scale = std::max(scale, std::abs(s[p]));
    const std::size_t q = conjugate_partner(p, grid);
    worst = std::max(worst, std::abs(s[p] - std::conj(s[q])));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

namespace detail {

// In-place unnormalized 2-D transform: rows then columns.
inline void fft2(std::vector<Complex>& data, std::size_t width, std::size_t height,
                 bool inverse) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<Complex> in(std::max(width, height));
  std::vector<Complex> out;
  for (std::size_t r = 0; r < height; ++r) {
    in.assign(data.begin() + static_cast<std::ptrdiff_t>(r * width),
              data.begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    std::copy(out.begin(), out.end(), data.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  in.resize(height);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) in[r] = data[r * width + c];
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (std::size_t r = 0; r < height; ++r) data[r * width + c] = out[r];
  }
}

}  // namespace detail

inline Spectrum forward_dft(const RealField& f, const FrequencyGrid& grid) {
  if (!grid.same_shape(f.width, f.height) || f.size() != grid.size()) {
    throw ConfigError("forward_dft: field dimensions do not match the grid");
  }
  Spectrum s(f.width, f.height);
  for (std::size_t p = 0; p < f.size(); ++p) s[p] = Complex(f[p], 0.0);
  detail::fft2(s.coeffs, f.width, f.height, false);
  const double scale = 1.0 / std::sqrt(static_cast<double>(f.size()));
  for (auto& c : s.coeffs) c *= scale;
  return s;
}

/// Unitary inverse. Throws SymmetryError when the input is not the transform
/// of a real field to within kHermitianTolerance, or when the imaginary part
/// of the result is not negligible.
inline RealField inverse_dft(const Spectrum& s, const FrequencyGrid& grid) {
  if (!grid.same_shape(s.width, s.height) || s.size() != grid.size()) {
    throw ConfigError("inverse_dft: spectrum dimensions do not match the grid");
  }
  const double asym = hermitian_residual(s, grid);
  if (asym > kHermitianTolerance) {
    throw SymmetryError("inverse_dft: spectrum violates Hermitian symmetry (relative residual " +
                        std::to_string(asym) + ")");
  }
  std::vector<Complex> data = s.coeffs;
  detail::fft2(data, s.width, s.height, true);
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.size()));
  RealField f(s.width, s.height);
  double max_re = 0.0;
  double max_im = 0.0;
  for (std::size_t p = 0; p < data.size(); ++p) {
    f[p] = data[p].real() * scale;
    max_re = std::max(max_re, std::abs(data[p].real()));
    max_im = std::max(max_im, std::abs(data[p].imag()));
  }
  if (max_re > 0.0 && max_im > kHermitianTolerance * max_re) {
    throw SymmetryError("inverse_dft: imaginary residual above tolerance");
  }
  return f;
}

}  // namespace chibsel
