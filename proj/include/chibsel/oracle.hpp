#pragma once
// Brute-force references: grid integration of the evidence over (gamma_x,
// gamma_e) and the dense-covariance Gaussian log-density for small images.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

#include "error.hpp"
#include "logsumexp.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace chibsel {

struct AxisGrid {
  double lower = 1e-3;
  double upper = 1e3;
  std::size_t nodes = 200;
};

struct IntegrationGrid {
  AxisGrid gamma_x;
  AxisGrid gamma_e;

  void validate() const {
    for (const AxisGrid* a : {&gamma_x, &gamma_e}) {
      if (!(a->lower > 0.0) || !(a->upper > a->lower)) {
        throw ConfigError("integration bounds must satisfy 0 < lower < upper");
      }
      if (a->nodes < 16) {
        throw ConfigError("integration grid needs at least 16 nodes per axis, got " +
                          std::to_string(a->nodes));
      }
    }
  }
};

inline constexpr double kBoundaryMarginNats = 3.0;

/// log p(y, gamma | M) * gamma_x * gamma_e as a function of (log gamma_x, log gamma_e).
class LogIntegrand {
 public:
  LogIntegrand(const Spectrum& y_hat, const ModelSpec& model) : model_(&model) {
    if (y_hat.size() != model.size()) throw UsageError("oracle: spectrum does not match model grid");
    a_.resize(model.size());
    b_.resize(model.size());
    n_.resize(model.size());
    for (std::size_t p = 0; p < model.size(); ++p) {
      a_[p] = model.blur.gain2[p] * model.image_psd.s[p];
      b_[p] = model.noise_psd.s[p];
      n_[p] = std::norm(y_hat[p]);
    }
    log2pi_term_ = -0.5 * static_cast<double>(model.size()) * std::log(2.0 * std::numbers::pi);
  }

  double operator()(double log_gx, double log_ge) const {
    const double ix = std::exp(-log_gx);
    const double ie = std::exp(-log_ge);
    double acc = 0.0;
    for (std::size_t p = 0; p < a_.size(); ++p) {
      const double sy = a_[p] * ix + b_[p] * ie;
      acc += std::log(sy) + n_[p] / sy;
    }
    const HyperState g{std::exp(log_gx), std::exp(log_ge)};
    return log2pi_term_ - 0.5 * acc + log_hyperprior(g, *model_) + log_gx + log_ge;
  }

 private:
  const ModelSpec* model_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> n_;
  double log2pi_term_ = 0.0;
};

/// Trapezoid rule on log-spaced nodes, accumulated in log domain. Throws
/// BoundaryError when a boundary node lies within kBoundaryMarginNats of the
/// peak, i.e. the box truncates visible mass.
inline double grid_log_evidence_spectrum(const Spectrum& y_hat, const ModelSpec& model,
                                         const IntegrationGrid& ig) {
  ig.validate();
  const LogIntegrand f(y_hat, model);
  const std::size_t nx = ig.gamma_x.nodes;
  const std::size_t ne = ig.gamma_e.nodes;
  const double ux0 = std::log(ig.gamma_x.lower);
  const double ue0 = std::log(ig.gamma_e.lower);
  const double dx = (std::log(ig.gamma_x.upper) - ux0) / static_cast<double>(nx - 1);
  const double de = (std::log(ig.gamma_e.upper) - ue0) / static_cast<double>(ne - 1);

  std::vector<double> terms;
  terms.reserve(nx * ne);
  double peak = -std::numeric_limits<double>::infinity();
  double edge = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nx; ++i) {
    const double ux = ux0 + dx * static_cast<double>(i);
    const double wx = (i == 0 || i + 1 == nx) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < ne; ++j) {
      const double ue = ue0 + de * static_cast<double>(j);
      const double we = (j == 0 || j + 1 == ne) ? 0.5 : 1.0;
      const double v = f(ux, ue);
      if (!std::isfinite(v)) throw NumericalError("oracle: non-finite integrand");
      peak = std::max(peak, v);
      if (i == 0 || j == 0 || i + 1 == nx || j + 1 == ne) edge = std::max(edge, v);
      terms.push_back(v + std::log(wx * we));
    }
  }
  if (edge > peak - kBoundaryMarginNats) {
    throw BoundaryError("oracle: integrand mass reaches the integration boundary (edge " +
                        std::to_string(edge - peak) + " nats from peak); widen the bounds");
  }
  return log_sum_exp(terms) + std::log(dx * de);
}

inline double grid_log_evidence(const RealField& y, const ModelSpec& model,
                                const IntegrationGrid& ig) {
  return grid_log_evidence_spectrum(forward_dft(y, model.grid), model, ig);
}

inline constexpr std::size_t kDenseMaxPixels = 256;

/// Working precision of the dense oracle. Floored PSDs make R_y condition
/// numbers reach ~1e12, which double-precision Cholesky cannot resolve to the
/// accuracy the spectral path is checked at.
using DenseReal = boost::multiprecision::float128;

namespace detail {

template <class Real>
using DenseMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

// F' diag(s) F entry by entry: first column by direct summation with exact
// integer phase reduction, then the circulant fill.
template <class Real>
DenseMatrix<Real> circulant_matrix(const std::vector<Complex>& s, const FrequencyGrid& grid) {
  const std::size_t W = grid.width;
  const std::size_t H = grid.height;
  const std::size_t P = grid.size();
  const Real two_pi = Real(2) * boost::math::constants::pi<Real>();
  std::vector<Real> cos_t(W * H);
  std::vector<Real> sin_t(W * H);
  // Table over phase fractions j/(W H) of a full turn.
  for (std::size_t j = 0; j < W * H; ++j) {
    const Real ph = two_pi * Real(j) / Real(W * H);
    cos_t[j] = cos(ph);
    sin_t[j] = sin(ph);
  }
  std::vector<Real> col(P);
  for (std::size_t d = 0; d < P; ++d) {
    const std::size_t dc = grid.col(d);
    const std::size_t dr = grid.row(d);
    Real acc = 0;
    for (std::size_t k = 0; k < P; ++k) {
      const std::size_t j = (((grid.col(k) * dc) % W) * H + ((grid.row(k) * dr) % H) * W) % (W * H);
      acc += Real(s[k].real()) * cos_t[j] - Real(s[k].imag()) * sin_t[j];
    }
    col[d] = acc / Real(P);
  }
  DenseMatrix<Real> m(P, P);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t q = 0; q < P; ++q) {
      const std::size_t dc = (grid.col(p) + W - grid.col(q)) % W;
      const std::size_t dr = (grid.row(p) + H - grid.row(q)) % H;
      m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = col[grid.index(dc, dr)];
    }
  }
  return m;
}

inline std::vector<Complex> to_complex(const std::vector<double>& v) {
  return std::vector<Complex>(v.begin(), v.end());
}

}  // namespace detail

/// R_y = H C_x H' / gamma_x + C_e / gamma_e built entry by entry.
template <class Real = DenseReal>
detail::DenseMatrix<Real> dense_data_covariance(const ModelSpec& model, const HyperState& gamma) {
  if (model.size() > kDenseMaxPixels) {
    throw SizeError("dense oracle limited to " + std::to_string(kDenseMaxPixels) + " pixels");
  }
  const auto H = detail::circulant_matrix<Real>(model.blur.s_h, model.grid);
  const auto Cx = detail::circulant_matrix<Real>(detail::to_complex(model.image_psd.s), model.grid);
  const auto Ce = detail::circulant_matrix<Real>(detail::to_complex(model.noise_psd.s), model.grid);
  detail::DenseMatrix<Real> R =
      (H * Cx * H.transpose()) / Real(gamma.gamma_x) + Ce / Real(gamma.gamma_e);
  return (R + R.transpose()) / Real(2);
}

/// log N(y; 0, R_y) through a Cholesky factorization of the explicit covariance.
template <class Real = DenseReal>
double dense_gaussian_logpdf(const RealField& y, const ModelSpec& model, const HyperState& gamma) {
  if (y.size() != model.size()) throw UsageError("dense oracle: image does not match model grid");
  const auto R = dense_data_covariance<Real>(model, gamma);
  Eigen::LLT<detail::DenseMatrix<Real>> llt(R);
  if (llt.info() != Eigen::Success) {
    throw DefinitenessError("dense oracle: covariance not positive definite");
  }
  Eigen::Matrix<Real, Eigen::Dynamic, 1> yv(static_cast<Eigen::Index>(y.size()));
  for (std::size_t p = 0; p < y.size(); ++p) yv(static_cast<Eigen::Index>(p)) = Real(y[p]);
  const Eigen::Matrix<Real, Eigen::Dynamic, 1> z = llt.matrixL().solve(yv);
  const detail::DenseMatrix<Real> L = llt.matrixL();
  Real logdet = 0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += log(L(i, i));
  logdet *= 2;
  const Real P = Real(y.size());
  const Real two_pi = Real(2) * boost::math::constants::pi<Real>();
  const Real value = -P / 2 * log(two_pi) - logdet / 2 - z.squaredNorm() / 2;
  return static_cast<double>(value);
}

}  // namespace chibsel
