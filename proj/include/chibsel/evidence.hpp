#pragma once
// Chib marginal-likelihood estimator and posterior model probabilities.
//
//   log p(y|M) = log p(y|g,M) + log p(g|M) - log p(g|y,M)
//
// evaluated at g = posterior mean of gamma, with the denominator estimated by
// averaging the exact conditional p(g | x^[k], y, M) over the retained chain.
// That conditional factorizes into two gamma densities whose rates depend on
// x^[k] only through the recorded statistics stat_e and stat_x.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "gibbs.hpp"
#include "logsumexp.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace chibsel {

enum class EvalPoint { Mean, Median };

struct ChibOptions {
  EvalPoint point = EvalPoint::Mean;
  std::size_t min_samples = 100;
};

struct EvidenceReport {
  int model_id = 0;
  std::string label;
  double log_evidence = 0.0;
  double term_likelihood = 0.0;
  double term_prior = 0.0;
  double term_posterior_density = 0.0;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  HyperState gamma_bar;
  std::size_t sample_count = 0;
};

struct ModelPosterior {
  std::vector<int> model_ids;
  std::vector<double> log_evidences;
  std::vector<double> probabilities;
  int selected = 0;
};

inline HyperState evaluation_point(std::span<const ChainRecord> samples, EvalPoint point) {
  if (point == EvalPoint::Mean) {
    double sx = 0.0;
    double se = 0.0;
    for (const auto& r : samples) {
      sx += r.gamma.gamma_x;
      se += r.gamma.gamma_e;
    }
    const double n = static_cast<double>(samples.size());
    return HyperState{sx / n, se / n};
  }
  auto median = [&](auto get) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& r : samples) v.push_back(get(r));
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
      m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
  };
  return HyperState{median([](const ChainRecord& r) { return r.gamma.gamma_x; }),
                    median([](const ChainRecord& r) { return r.gamma.gamma_e; })};
}

/// log p(at | x^[k], y, M) for every sample.
inline std::vector<double> conditional_log_densities(std::span<const ChainRecord> samples,
                                                     const HyperState& at,
                                                     const ModelSpec& model) {
  const auto& h = model.hyperprior;
  const double shape_e = posterior_shape(h.alpha_e, model.size());
  const double shape_x = posterior_shape(h.alpha_x, model.size());
  std::vector<double> ell;
  ell.reserve(samples.size());
  for (const auto& r : samples) {
    ell.push_back(gamma_logpdf(at.gamma_e, shape_e, h.beta_e + r.stat_e) +
                  gamma_logpdf(at.gamma_x, shape_x, h.beta_x + r.stat_x));
  }
  return ell;
}

/// Batch-means standard error of log mean exp(ell), blocks of length sqrt(n).
inline double blocked_log_std_error(std::span<const double> ell) {
  const std::size_t n = ell.size();
  const std::size_t len = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(n))));
  const std::size_t blocks = n / len;
  if (blocks < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = *std::max_element(ell.begin(), ell.end());
  std::vector<double> means(blocks, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < len; ++i) means[b] += std::exp(ell[b * len + i] - m);
    means[b] /= static_cast<double>(len);
  }
  double mu = 0.0;
  for (double v : means) mu += v;
  mu /= static_cast<double>(blocks);
  double var = 0.0;
  for (double v : means) var += (v - mu) * (v - mu);
  var /= static_cast<double>(blocks - 1);
  return std::sqrt(var / static_cast<double>(blocks)) / mu;
}

/// Chib estimate from an explicit slice of retained records.
inline EvidenceReport chib_from_samples(const Spectrum& y_hat, const ModelSpec& model,
                                        std::span<const ChainRecord> samples,
                                        const ChibOptions& opts = {}) {
  if (samples.size() < std::max<std::size_t>(1, opts.min_samples)) {
    throw InsufficientSamplesError("chib: " + std::to_string(samples.size()) +
                                   " retained samples, need at least " +
                                   std::to_string(std::max<std::size_t>(1, opts.min_samples)));
  }
  EvidenceReport rep;
  rep.model_id = model.id;
  rep.label = model.label();
  rep.sample_count = samples.size();
  rep.gamma_bar = evaluation_point(samples, opts.point);
  const auto ell = conditional_log_densities(samples, rep.gamma_bar, model);
  rep.term_posterior_density = log_mean_exp(ell);
  rep.term_likelihood = log_likelihood(y_hat, rep.gamma_bar, model);
  rep.term_prior = log_hyperprior(rep.gamma_bar, model);
  rep.log_evidence = rep.term_likelihood + rep.term_prior - rep.term_posterior_density;
  rep.std_error = blocked_log_std_error(ell);
  if (!std::isfinite(rep.log_evidence)) throw NumericalError("chib: non-finite log evidence");
  return rep;
}

inline void check_chain_matches(const ModelSpec& model, const GibbsChain& chain) {
  if (chain.model_id != model.id || !model.grid.same_shape(chain.width, chain.height)) {
    throw UsageError("chib: chain was not produced for model " + std::to_string(model.id));
  }
}

inline EvidenceReport chib_log_evidence_spectrum(const Spectrum& y_hat, const ModelSpec& model,
                                                 const GibbsChain& chain,
                                                 const ChibOptions& opts = {}) {
  check_chain_matches(model, chain);
  return chib_from_samples(y_hat, model, chain.retained(), opts);
}

inline EvidenceReport chib_log_evidence(const RealField& y, const ModelSpec& model,
                                        const GibbsChain& chain, const ChibOptions& opts = {}) {
  check_chain_matches(model, chain);
  return chib_from_samples(forward_dft(y, model.grid), model, chain.retained(), opts);
}

/// Shifted softmax of log evidence + log prior; ties go to the lowest id.
inline ModelPosterior posterior_model_probs(std::span<const EvidenceReport> reports,
                                            std::span<const double> priors) {
  if (reports.size() != priors.size() || reports.empty()) {
    throw UsageError("posterior_model_probs: need one prior weight per report");
  }
  ModelPosterior post;
  std::vector<double> lw(reports.size());
  for (std::size_t k = 0; k < reports.size(); ++k) {
    if (!(priors[k] >= 0.0)) throw UsageError("posterior_model_probs: negative prior weight");
    post.model_ids.push_back(reports[k].model_id);
    post.log_evidences.push_back(reports[k].log_evidence);
    lw[k] = reports[k].log_evidence + std::log(priors[k]);
  }
  const double top = *std::max_element(lw.begin(), lw.end());
  post.probabilities.resize(lw.size());
  double total = 0.0;
  for (std::size_t k = 0; k < lw.size(); ++k) {
    post.probabilities[k] = std::exp(lw[k] - top);
    total += post.probabilities[k];
  }
  std::size_t best = 0;
  for (std::size_t k = 0; k < lw.size(); ++k) {
    post.probabilities[k] /= total;
    const bool better = lw[k] > lw[best] ||
                        (lw[k] == lw[best] && post.model_ids[k] < post.model_ids[best]);
    if (better) best = k;
  }
  post.selected = post.model_ids[best];
  return post;
}

inline ModelPosterior posterior_model_probs(std::span<const EvidenceReport> reports) {
  const std::vector<double> uniform(reports.size(), 1.0 / static_cast<double>(reports.size()));
  return posterior_model_probs(reports, uniform);
}

}  // namespace chibsel
