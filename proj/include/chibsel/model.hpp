#pragma once
// Candidate models and their closed-form log densities.
//
// Covariances are R_x = C_x / gamma_x and R_e = C_e / gamma_e with structure
// matrices C_x = F' S_x F, C_e = F' S_e F. Wherever a weighted norm or an
// inverse covariance appears inside a conditional of the sampler, it is taken
// with respect to the structure matrix (C_e^-1, C_x^-1) and the precision
// factor is carried explicitly; this is the reading under which the gamma
// and Gaussian conditionals are conjugate.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "psd.hpp"
#include "spectral.hpp"

namespace chibsel {

inline constexpr double kDefaultHyperParam = 1e-3;

struct HyperPrior {
  double alpha_x = kDefaultHyperParam;
  double beta_x = kDefaultHyperParam;
  double alpha_e = kDefaultHyperParam;
  double beta_e = kDefaultHyperParam;

  void validate() const {
    if (!(alpha_x > 0 && beta_x > 0 && alpha_e > 0 && beta_e > 0)) {
      throw ConfigError("hyperprior parameters must all be strictly positive");
    }
  }
};

struct HyperState {
  double gamma_x = 1.0;
  double gamma_e = 1.0;

  [[nodiscard]] bool valid() const {
    return gamma_x > 0 && gamma_e > 0 && std::isfinite(gamma_x) && std::isfinite(gamma_e);
  }
};

struct ModelSpec {
  int id = 1;
  PsdKind image_kind;
  PsdKind noise_kind;
  FrequencyGrid grid;
  PsdField image_psd;   // s_x
  PsdField noise_psd;   // s_e
  BlurTransfer blur;    // s_h
  HyperPrior hyperprior;

  [[nodiscard]] std::size_t size() const { return grid.size(); }
  [[nodiscard]] std::string label() const {
    return image_kind.label() + "/" + noise_kind.label();
  }
};

inline ModelSpec make_model(int id, const PsdKind& image, const PsdKind& noise,
                            const BlurTransfer& blur, const HyperPrior& prior,
                            const FrequencyGrid& grid) {
  prior.validate();
  if (blur.size() != grid.size()) throw ConfigError("blur transfer does not match grid");
  return ModelSpec{id,
                   image,
                   noise,
                   grid,
                   evaluate_psd(image, grid),
                   evaluate_psd(noise, grid),
                   blur,
                   prior};
}

struct ModelCatalog {
  std::vector<ModelSpec> models;
  std::vector<double> prior_weights;

  [[nodiscard]] std::size_t size() const { return models.size(); }

  [[nodiscard]] bool contains(int id) const {
    for (const auto& m : models) {
      if (m.id == id) return true;
    }
    return false;
  }

  [[nodiscard]] const ModelSpec& by_id(int id) const {
    for (const auto& m : models) {
      if (m.id == id) return m;
    }
    throw UsageError("no model with id " + std::to_string(id) + " in catalog");
  }
};

/// Image kind major, noise kind minor; ids 1..K; uniform prior weights.
inline ModelCatalog build_catalog(const std::vector<PsdKind>& image_kinds,
                                  const std::vector<PsdKind>& noise_kinds,
                                  const BlurTransfer& blur, const HyperPrior& prior,
                                  const FrequencyGrid& grid) {
  if (image_kinds.empty() || noise_kinds.empty()) {
    throw ConfigError("build_catalog: image and noise kind lists must be non-empty");
  }
  ModelCatalog cat;
  int id = 1;
  for (const auto& ik : image_kinds) {
    for (const auto& nk : noise_kinds) cat.models.push_back(make_model(id++, ik, nk, blur, prior, grid));
  }
  cat.prior_weights.assign(cat.models.size(), 1.0 / static_cast<double>(cat.models.size()));
  return cat;
}

/// s_y(p) = gain2(p) s_x(p) / gamma_x + s_e(p) / gamma_e
inline std::vector<double> data_psd(const ModelSpec& model, const HyperState& gamma) {
  const double ix = 1.0 / gamma.gamma_x;
  const double ie = 1.0 / gamma.gamma_e;
  std::vector<double> sy(model.size());
  for (std::size_t p = 0; p < sy.size(); ++p) {
    sy[p] = model.blur.gain2[p] * model.image_psd.s[p] * ix + model.noise_psd.s[p] * ie;
  }
  return sy;
}

/// Normalized gamma log-density with shape/rate parametrization.
inline double gamma_logpdf(double value, double shape, double rate) {
  if (!(value > 0.0) || !(shape > 0.0) || !(rate > 0.0)) {
    throw DomainError("gamma_logpdf: value, shape and rate must be positive");
  }
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(value) -
         rate * value;
}

/// log p(y | gamma, M) from |y^(p)|^2 and the data PSD.
inline double log_likelihood(const Spectrum& y_hat, const HyperState& gamma,
                             const ModelSpec& model) {
  if (y_hat.size() != model.size() || !model.grid.same_shape(y_hat.width, y_hat.height)) {
    throw UsageError("log_likelihood: spectrum does not match model grid");
  }
  const double ix = 1.0 / gamma.gamma_x;
  const double ie = 1.0 / gamma.gamma_e;
  double acc = 0.0;
  for (std::size_t p = 0; p < y_hat.size(); ++p) {
    const double sy = model.blur.gain2[p] * model.image_psd.s[p] * ix + model.noise_psd.s[p] * ie;
    acc += std::log(sy) + std::norm(y_hat[p]) / sy;
  }
  const double value =
      -0.5 * static_cast<double>(y_hat.size()) * std::log(2.0 * std::numbers::pi) - 0.5 * acc;
  if (!std::isfinite(value)) throw NumericalError("log_likelihood: non-finite result");
  return value;
}

inline double log_hyperprior(const HyperState& gamma, const ModelSpec& model) {
  const auto& h = model.hyperprior;
  return gamma_logpdf(gamma.gamma_x, h.alpha_x, h.beta_x) +
         gamma_logpdf(gamma.gamma_e, h.alpha_e, h.beta_e);
}

inline nlohmann::json psd_kind_json(const PsdKind& k) {
  nlohmann::json j = {{"kind", k.label()}};
  if (k.family != PsdFamily::White) j["omega"] = k.omega;
  if (k.family == PsdFamily::Gauss) j["gauss_isotropic"] = k.gauss_isotropic;
  return j;
}

/// Provenance description of a catalog.
inline nlohmann::json catalog_json(const ModelCatalog& cat) {
  nlohmann::json models = nlohmann::json::array();
  for (std::size_t k = 0; k < cat.size(); ++k) {
    const auto& m = cat.models[k];
    models.push_back({{"id", m.id},
                      {"image", psd_kind_json(m.image_kind)},
                      {"noise", psd_kind_json(m.noise_kind)},
                      {"blur", m.blur.description},
                      {"hyperprior",
                       {{"alpha_x", m.hyperprior.alpha_x},
                        {"beta_x", m.hyperprior.beta_x},
                        {"alpha_e", m.hyperprior.alpha_e},
                        {"beta_e", m.hyperprior.beta_e}}},
                      {"prior_weight", cat.prior_weights[k]}});
  }
  nlohmann::json j;
  if (!cat.models.empty()) {
    j["width"] = cat.models.front().grid.width;
    j["height"] = cat.models.front().grid.height;
  }
  j["models"] = std::move(models);
  return j;
}

}  // namespace chibsel
