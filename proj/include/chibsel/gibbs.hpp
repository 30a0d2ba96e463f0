#pragma once
// Fourier-domain Gibbs sampler over (x, gamma_e, gamma_x).
//
// With gamma fixed, x | y is Gaussian and diagonal in the Fourier basis:
//   tau(p) = gamma_e gain2(p) / s_e(p) + gamma_x / s_x(p)
//   m(p)   = gamma_e conj(s_h(p)) y^(p) / (s_e(p) tau(p))
// Only one bin of each conjugate pair is drawn; its partner is the complex
// conjugate, so every draw is the spectrum of a real image.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "random.hpp"
#include "spectral.hpp"

namespace chibsel {

struct ChainConfig {
  std::size_t iterations = 10000;
  std::optional<std::size_t> burn_in;  // default iterations / 10
  std::uint64_t seed = 0;
  std::optional<HyperState> initial;   // default: hyperprior mean alpha / beta
  std::size_t keep_image_every = 0;    // diagnostic thinning; 0 keeps no images

  [[nodiscard]] std::size_t resolved_burn_in() const {
    return burn_in ? *burn_in : iterations / 10;
  }

  void validate() const {
    if (iterations == 0) throw ConfigError("chain iterations must be positive");
    if (resolved_burn_in() >= iterations) {
      throw ConfigError("burn-in must be smaller than the number of iterations");
    }
    if (initial && !initial->valid()) throw ConfigError("initial gamma must be positive");
  }
};

/// One sweep: gamma after the sweep and the sufficient statistics of the x draw
/// that produced it.
struct ChainRecord {
  HyperState gamma;
  double stat_e = 0.0;  // 1/2 sum_p |y^ - s_h x^|^2 / s_e
  double stat_x = 0.0;  // 1/2 sum_p |x^|^2 / s_x
};

struct GibbsChain {
  int model_id = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  ChainConfig config;
  std::vector<ChainRecord> records;
  std::vector<RealField> images;  // only with keep_image_every > 0

  [[nodiscard]] std::size_t burn_in() const { return config.resolved_burn_in(); }
  [[nodiscard]] bool is_burn_in(std::size_t g) const { return g < burn_in(); }
  [[nodiscard]] std::span<const ChainRecord> retained() const {
    return std::span<const ChainRecord>(records).subspan(std::min(burn_in(), records.size()));
  }
};

namespace detail {

// Pair-bin fields from some offset on.
struct PairBins {
  const double* data_prec;
  const double* prior_prec;
  const double* c_re;
  const double* c_im;
  const double* y_re;
  const double* y_im;
  const double* h_re;
  const double* h_im;
  const double* inv_se;
};

// Draws len pair bins from the 2 len normals in z (re, im interleaved) and
// adds their statistics into four running sums each.
[[gnu::always_inline]] inline void pair_block_body(const PairBins& a, std::size_t len, double ge,
                                                   double gx, const double* z, double* pe,
                                                   double* px) {
  constexpr std::size_t kMax = 256;
  double ce[kMax];
  double cx[kMax];
  for (std::size_t i = 0; i < len; ++i) {
    const double inv = 1.0 / (ge * a.data_prec[i] + gx * a.prior_prec[i]);
    const double sd = std::sqrt(0.5 * inv);
    const double xr = ge * a.c_re[i] * inv + sd * z[2 * i];
    const double xi = ge * a.c_im[i] * inv + sd * z[2 * i + 1];
    const double rr = a.y_re[i] - (a.h_re[i] * xr - a.h_im[i] * xi);
    const double ri = a.y_im[i] - (a.h_re[i] * xi + a.h_im[i] * xr);
    ce[i] = (rr * rr + ri * ri) * a.inv_se[i];
    cx[i] = (xr * xr + xi * xi) * a.prior_prec[i];
  }
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      pe[j] += ce[i + j];
      px[j] += cx[i + j];
    }
  }
  for (; i < len; ++i) {
    pe[i & 3] += ce[i];
    px[i & 3] += cx[i];
  }
}

inline void pair_block_generic(const PairBins& a, std::size_t len, double ge, double gx,
                               const double* z, double* pe, double* px) {
  pair_block_body(a, len, ge, gx, z, pe, px);
}

#ifdef CHIBSEL_ZIGGURAT_AVX2
// Wider vectors only; no contraction, so results match the generic path bit for bit.
__attribute__((target("avx2"))) inline void pair_block_avx2(const PairBins& a, std::size_t len,
                                                            double ge, double gx, const double* z,
                                                            double* pe, double* px) {
  pair_block_body(a, len, ge, gx, z, pe, px);
}
#endif

inline void pair_block(const PairBins& a, std::size_t len, double ge, double gx, const double* z,
                       double* pe, double* px) {
#ifdef CHIBSEL_ZIGGURAT_AVX2
  if (cpu_has_avx2()) {
    pair_block_avx2(a, len, ge, gx, z, pe, px);
    return;
  }
#endif
  pair_block_generic(a, len, ge, gx, z, pe, px);
}

}  // namespace detail

struct XStats {
  double stat_e = 0.0;
  double stat_x = 0.0;
};

/// Conditional law of x^ given (y, gamma, M), precomputed for one (y, model).
class XConditional {
 public:
  XConditional(const Spectrum& y_hat, const ModelSpec& model)
      : width_(y_hat.width), height_(y_hat.height) {
    if (y_hat.size() != model.size() || !model.grid.same_shape(y_hat.width, y_hat.height)) {
      throw UsageError("XConditional: spectrum does not match model grid");
    }
    for (std::size_t p = 0; p < y_hat.size(); ++p) {
      const std::size_t q = conjugate_partner(p, model.grid);
      if (q < p) continue;
      const double inv_se = 1.0 / model.noise_psd.s[p];
      Bin b;
      b.index = p;
      b.partner = q;
      b.data_prec = model.blur.gain2[p] * inv_se;
      b.prior_prec = 1.0 / model.image_psd.s[p];
      const Complex c = std::conj(model.blur.s_h[p]) * y_hat[p] * inv_se;
      b.c_re = c.real();
      b.c_im = c.imag();
      b.y_re = y_hat[p].real();
      b.y_im = y_hat[p].imag();
      b.h_re = model.blur.s_h[p].real();
      b.h_im = model.blur.s_h[p].imag();
      b.inv_se = inv_se;
      (q == p ? self_ : pairs_).push_back(b);
      if (q != p) soa_.push(b);
    }
  }

  [[nodiscard]] std::size_t size() const { return width_ * height_; }

  /// tau(p) on every flat index.
  [[nodiscard]] std::vector<double> precision(const HyperState& gamma) const {
    std::vector<double> tau(size());
    for_each_bin([&](const Bin& b) {
      const double t = gamma.gamma_e * b.data_prec + gamma.gamma_x * b.prior_prec;
      tau[b.index] = t;
      tau[b.partner] = t;
    });
    return tau;
  }

  [[nodiscard]] Spectrum mean(const HyperState& gamma) const {
    Spectrum m(width_, height_);
    for_each_bin([&](const Bin& b) {
      const double t = gamma.gamma_e * b.data_prec + gamma.gamma_x * b.prior_prec;
      const Complex v(gamma.gamma_e * b.c_re / t, gamma.gamma_e * b.c_im / t);
      m[b.index] = b.index == b.partner ? Complex(v.real(), 0.0) : v;
      m[b.partner] = std::conj(m[b.index]);
    });
    return m;
  }

  /// Full Hermitian draw of x^. Consumes the same random numbers, in the same
  /// order, as draw_stats.
  Spectrum draw(const HyperState& gamma, Rng& rng) const {
    Spectrum x(width_, height_);
    for (const Bin& b : self_) {
      const double t = gamma.gamma_e * b.data_prec + gamma.gamma_x * b.prior_prec;
      x[b.index] = Complex(gamma.gamma_e * b.c_re / t + rng.normal() / std::sqrt(t), 0.0);
    }
    for (const Bin& b : pairs_) {
      const double t = gamma.gamma_e * b.data_prec + gamma.gamma_x * b.prior_prec;
      const double inv = 1.0 / t;
      const double sd = std::sqrt(0.5 * inv);
      const double re = gamma.gamma_e * b.c_re * inv + sd * rng.normal();
      const double im = gamma.gamma_e * b.c_im * inv + sd * rng.normal();
      x[b.index] = Complex(re, im);
      x[b.partner] = Complex(re, -im);
    }
    return x;
  }

  /// Draws x^ and returns only its sufficient statistics; nothing is stored.
  XStats draw_stats(const HyperState& gamma, Rng& rng) const {
    const double ge = gamma.gamma_e;
    const double gx = gamma.gamma_x;
    double se2 = 0.0;  // self-conjugate bins of |r|^2 / s_e
    double sx2 = 0.0;  // self-conjugate bins of |x|^2 / s_x
    for (const Bin& b : self_) {
      const double t = ge * b.data_prec + gx * b.prior_prec;
      const double x = ge * b.c_re / t + rng.normal() / std::sqrt(t);
      const double r = b.y_re - b.h_re * x;
      se2 += r * r * b.inv_se;
      sx2 += x * x * b.prior_prec;
    }
    constexpr std::size_t kBlock = 256;
    std::array<double, 2 * kBlock> z;
    std::array<double, 4> pe{};
    std::array<double, 4> px{};
    const std::size_t n = soa_.data_prec.size();
    for (std::size_t start = 0; start < n; start += kBlock) {
      const std::size_t len = std::min(kBlock, n - start);
      rng.fill_normal(z.data(), 2 * len);
      detail::pair_block(soa_.at(start), len, ge, gx, z.data(), pe.data(), px.data());
    }
    // Each pair bin stands for two identical terms of the full sum.
    return XStats{0.5 * se2 + (pe[0] + pe[1]) + (pe[2] + pe[3]),
                  0.5 * sx2 + (px[0] + px[1]) + (px[2] + px[3])};
  }

  /// Sufficient statistics of an arbitrary x^ on all P bins.
  [[nodiscard]] XStats stats_of(const Spectrum& x_hat) const {
    double se2 = 0.0;
    double sx2 = 0.0;
    for_each_bin([&](const Bin& b) {
      const double mult = b.index == b.partner ? 1.0 : 2.0;
      const Complex x = x_hat[b.index];
      const Complex r = Complex(b.y_re, b.y_im) - Complex(b.h_re, b.h_im) * x;
      se2 += mult * std::norm(r) * b.inv_se;
      sx2 += mult * std::norm(x) * b.prior_prec;
    });
    return XStats{0.5 * se2, 0.5 * sx2};
  }

 private:
  struct Bin {
    std::size_t index = 0;
    std::size_t partner = 0;
    double data_prec = 0.0;   // gain2 / s_e
    double prior_prec = 0.0;  // 1 / s_x
    double c_re = 0.0;        // conj(s_h) y^ / s_e
    double c_im = 0.0;
    double y_re = 0.0;
    double y_im = 0.0;
    double h_re = 0.0;
    double h_im = 0.0;
    double inv_se = 0.0;
  };

  // Pair bins again, one array per field, for the sweep hot loop.
  struct Soa {
    std::vector<double> data_prec, prior_prec, c_re, c_im, y_re, y_im, h_re, h_im, inv_se;

    [[nodiscard]] detail::PairBins at(std::size_t i) const {
      return {data_prec.data() + i, prior_prec.data() + i, c_re.data() + i,
              c_im.data() + i,      y_re.data() + i,       y_im.data() + i,
              h_re.data() + i,      h_im.data() + i,       inv_se.data() + i};
    }

    void push(const Bin& b) {
      data_prec.push_back(b.data_prec);
      prior_prec.push_back(b.prior_prec);
      c_re.push_back(b.c_re);
      c_im.push_back(b.c_im);
      y_re.push_back(b.y_re);
      y_im.push_back(b.y_im);
      h_re.push_back(b.h_re);
      h_im.push_back(b.h_im);
      inv_se.push_back(b.inv_se);
    }
  };

  template <class F>
  void for_each_bin(F&& f) const {
    for (const Bin& b : self_) f(b);
    for (const Bin& b : pairs_) f(b);
  }

  std::size_t width_;
  std::size_t height_;
  std::vector<Bin> self_;
  std::vector<Bin> pairs_;
  Soa soa_;
};

inline Spectrum sample_x_conditional(const Spectrum& y_hat, const HyperState& gamma,
                                     const ModelSpec& model, Rng& rng) {
  return XConditional(y_hat, model).draw(gamma, rng);
}

struct GammaDraw {
  double value = 0.0;
  double stat = 0.0;
};

inline double posterior_shape(double alpha, std::size_t pixels) {
  return alpha + 0.5 * static_cast<double>(pixels);
}

inline GammaDraw sample_gamma_e(const Spectrum& y_hat, const Spectrum& x_hat,
                                const ModelSpec& model, Rng& rng) {
  if (x_hat.size() != model.size() || y_hat.size() != model.size()) {
    throw UsageError("sample_gamma_e: spectra do not match model grid");
  }
  double acc = 0.0;
  for (std::size_t p = 0; p < model.size(); ++p) {
    acc += std::norm(y_hat[p] - model.blur.s_h[p] * x_hat[p]) / model.noise_psd.s[p];
  }
  const double stat = 0.5 * acc;
  const auto& h = model.hyperprior;
  return {sample_gamma(rng, posterior_shape(h.alpha_e, model.size()), h.beta_e + stat), stat};
}

inline GammaDraw sample_gamma_x(const Spectrum& x_hat, const ModelSpec& model, Rng& rng) {
  if (x_hat.size() != model.size()) throw UsageError("sample_gamma_x: spectrum does not match model grid");
  double acc = 0.0;
  for (std::size_t p = 0; p < model.size(); ++p) acc += std::norm(x_hat[p]) / model.image_psd.s[p];
  const double stat = 0.5 * acc;
  const auto& h = model.hyperprior;
  return {sample_gamma(rng, posterior_shape(h.alpha_x, model.size()), h.beta_x + stat), stat};
}

inline HyperState hyperprior_mean(const HyperPrior& h) {
  return HyperState{h.alpha_x / h.beta_x, h.alpha_e / h.beta_e};
}

/// Sweeps x -> gamma_e -> gamma_x for config.iterations iterations.
inline GibbsChain run_gibbs_spectrum(const Spectrum& y_hat, const ModelSpec& model,
                                     const ChainConfig& config) {
  config.validate();
  const XConditional cond(y_hat, model);
  const auto& h = model.hyperprior;
  const double shape_e = posterior_shape(h.alpha_e, model.size());
  const double shape_x = posterior_shape(h.alpha_x, model.size());

  GibbsChain chain;
  chain.model_id = model.id;
  chain.width = y_hat.width;
  chain.height = y_hat.height;
  chain.config = config;
  chain.records.reserve(config.iterations);

  Rng rng(config.seed);
  HyperState gamma = config.initial ? *config.initial : hyperprior_mean(h);
  for (std::size_t g = 0; g < config.iterations; ++g) {
    XStats st;
    if (config.keep_image_every > 0 && g % config.keep_image_every == 0) {
      const Spectrum x = cond.draw(gamma, rng);
      st = cond.stats_of(x);
      chain.images.push_back(inverse_dft(x, model.grid));
    } else {
      st = cond.draw_stats(gamma, rng);
    }
    gamma.gamma_e = sample_gamma(rng, shape_e, h.beta_e + st.stat_e);
    gamma.gamma_x = sample_gamma(rng, shape_x, h.beta_x + st.stat_x);
    if (!gamma.valid()) {
      throw NumericalError("run_gibbs: non-positive or non-finite precision at iteration " +
                           std::to_string(g));
    }
    chain.records.push_back(ChainRecord{gamma, st.stat_e, st.stat_x});
  }
  return chain;
}

inline GibbsChain run_gibbs(const RealField& y, const ModelSpec& model, const ChainConfig& config) {
  return run_gibbs_spectrum(forward_dft(y, model.grid), model, config);
}

}  // namespace chibsel
