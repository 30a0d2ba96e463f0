#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <chibsel/evidence.hpp>
#include <chibsel/oracle.hpp>
#include <chibsel/synth.hpp>

#include "support.hpp"

namespace chibsel {
namespace {

EvidenceReport with_evidence(int id, double le) {
  EvidenceReport r;
  r.model_id = id;
  r.log_evidence = le;
  return r;
}

std::vector<EvidenceReport> reports_of(const std::vector<double>& le) {
  std::vector<EvidenceReport> out;
  for (std::size_t k = 0; k < le.size(); ++k) out.push_back(with_evidence(int(k) + 1, le[k]));
  return out;
}

struct ChainFixture {
  ModelSpec model;
  RealField y;
  GibbsChain chain;
};

ChainFixture make_chain(std::size_t n, std::size_t iterations, std::uint64_t seed) {
  const auto g = build_grid(n, n);
  ChainFixture f;
  f.model = make_model(3, PsdKind{PsdFamily::Lorentz}, PsdKind{PsdFamily::White},
                       sinc_blur_transfer(2.0, g), HyperPrior{}, g);
  const TruthConfig truth{6.0, 4.0, seed};
  f.y = generate_observation(generate_image(f.model, truth), f.model, truth);
  ChainConfig c;
  c.iterations = iterations;
  c.seed = seed + 1;
  f.chain = run_gibbs(f.y, f.model, c);
  return f;
}

TEST(GammaLogPdf, Exponential) {
  EXPECT_DOUBLE_EQ(gamma_logpdf(1.0, 1.0, 1.0), -1.0);
}

TEST(GammaLogPdf, LargeShapeMatchesHighPrecision) {
  using mp = boost::multiprecision::cpp_bin_float_50;
  const mp a(8192);
  const mp b(2048);
  const mp v(4);
  const mp ref = a * log(b) - boost::math::lgamma(a) + (a - 1) * log(v) - b * v;
  const double want = ref.convert_to<double>();
  EXPECT_NEAR(gamma_logpdf(4.0, 8192.0, 2048.0), want, 1e-10 * std::abs(want));
}

TEST(GammaLogPdf, IntegratesToOne) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const double total = integrator.integrate([](double g) { return std::exp(gamma_logpdf(g, 2.5, 0.7)); });
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(GammaLogPdf, NonPositiveArgumentsRejected) {
  EXPECT_THROW(gamma_logpdf(0.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(gamma_logpdf(1.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(gamma_logpdf(1.0, 1.0, -2.0), DomainError);
}

TEST(LogSumExp, LargeMagnitudes) {
  const std::vector<double> v = {1e4, 1e4};
  EXPECT_EQ(log_mean_exp(v), 1e4);
  const std::vector<double> w = {-2e4, -2e4 + std::log(3.0)};
  EXPECT_NEAR(log_sum_exp(w), -2e4 + std::log(4.0), 1e-11);
  EXPECT_TRUE(std::isinf(log_sum_exp(std::vector<double>{})));
}

TEST(Chib, SingleRetainedSampleIsItsOwnDensity) {
  const auto f = make_chain(8, 20, 3);
  const auto one = f.chain.retained().subspan(0, 1);
  ChibOptions opts;
  opts.min_samples = 1;
  const auto rep = chib_from_samples(forward_dft(f.y, f.model.grid), f.model, one, opts);
  const auto ell = conditional_log_densities(one, rep.gamma_bar, f.model);
  EXPECT_EQ(rep.term_posterior_density, ell[0]);
  EXPECT_EQ(rep.gamma_bar.gamma_x, one[0].gamma.gamma_x);
  EXPECT_EQ(rep.sample_count, 1u);
}

TEST(Chib, ReportIsAssembledFromItsTerms) {
  const auto f = make_chain(16, 600, 5);
  const auto rep = chib_log_evidence(f.y, f.model, f.chain);
  EXPECT_EQ(rep.log_evidence, rep.term_likelihood + rep.term_prior - rep.term_posterior_density);
  EXPECT_EQ(rep.sample_count, 540u);
  EXPECT_EQ(rep.model_id, 3);
  EXPECT_EQ(rep.label, "Lorentz/White");
  EXPECT_TRUE(std::isfinite(rep.std_error));
  EXPECT_GT(rep.std_error, 0.0);

  // Posterior-mean evaluation point recomputed directly.
  double gx = 0.0;
  for (std::size_t g = 60; g < 600; ++g) gx += f.chain.records[g].gamma.gamma_x;
  EXPECT_NEAR(rep.gamma_bar.gamma_x, gx / 540.0, 1e-12 * rep.gamma_bar.gamma_x);
}

TEST(Chib, EvaluationPointDoesNotMatter) {
  const auto f = make_chain(32, 5000, 7);
  const auto mean = chib_log_evidence(f.y, f.model, f.chain, ChibOptions{EvalPoint::Mean, 100});
  const auto median = chib_log_evidence(f.y, f.model, f.chain, ChibOptions{EvalPoint::Median, 100});
  EXPECT_NE(mean.gamma_bar.gamma_x, median.gamma_bar.gamma_x);
  const double se = std::max(mean.std_error, median.std_error);
  EXPECT_LT(std::abs(mean.log_evidence - median.log_evidence), 3.0 * se)
      << mean.log_evidence << " vs " << median.log_evidence << " se " << se;
}

TEST(Chib, AgreesWithGridIntegration) {
  const auto f = make_chain(16, 4000, 11);
  const auto rep = chib_log_evidence(f.y, f.model, f.chain);
  const double grid = grid_log_evidence(f.y, f.model, IntegrationGrid{});
  EXPECT_LT(std::abs(rep.log_evidence - grid), 1.0) << rep.log_evidence << " vs " << grid;
}

TEST(Chib, TooFewSamples) {
  const auto f = make_chain(8, 50, 1);
  EXPECT_THROW(chib_log_evidence(f.y, f.model, f.chain), InsufficientSamplesError);
}

TEST(Chib, ChainFromAnotherModelRejected) {
  const auto f = make_chain(8, 200, 1);
  ModelSpec other = f.model;
  other.id = 4;
  EXPECT_THROW(chib_log_evidence(f.y, other, f.chain), UsageError);
  const auto g = build_grid(16, 16);
  const auto wrong_grid = make_model(3, PsdKind{PsdFamily::Lorentz}, PsdKind{PsdFamily::White},
                                     identity_blur(g), HyperPrior{}, g);
  EXPECT_THROW(chib_log_evidence(testing::random_field(16, 16, 1), wrong_grid, f.chain), UsageError);
}

TEST(BlockedStdError, MatchesIidScale) {
  Rng rng(4);
  const std::size_t n = 10000;
  std::vector<double> ell(n);
  double s = 0.0;
  double s2 = 0.0;
  for (auto& v : ell) {
    const double u = 0.5 + rng.uniform();
    s += u;
    s2 += u * u;
    v = std::log(u) + 5000.0;
  }
  const double mean = s / double(n);
  const double iid = std::sqrt((s2 / double(n) - mean * mean) / double(n)) / mean;
  const double got = blocked_log_std_error(ell);
  EXPECT_GT(got, 0.5 * iid);
  EXPECT_LT(got, 2.0 * iid);
  EXPECT_TRUE(std::isnan(blocked_log_std_error(std::vector<double>{1.0})));
}

TEST(ModelPosterior, TwoEqualModels) {
  const auto post = posterior_model_probs(reports_of({0.0, 0.0}));
  EXPECT_EQ(post.probabilities[0], 0.5);
  EXPECT_EQ(post.probabilities[1], 0.5);
  EXPECT_EQ(post.selected, 1);
}

TEST(ModelPosterior, ThreeToOne) {
  const auto post = posterior_model_probs(reports_of({std::log(3.0), 0.0}));
  EXPECT_NEAR(post.probabilities[0], 0.75, 1e-15);
  EXPECT_NEAR(post.probabilities[1], 0.25, 1e-15);
  EXPECT_EQ(post.selected, 1);
}

TEST(ModelPosterior, PriorWeightsEnterAdditively) {
  const auto reps = reports_of({0.0, 0.0});
  const std::vector<double> prior = {0.2, 0.8};
  const auto post = posterior_model_probs(reps, prior);
  EXPECT_NEAR(post.probabilities[1], 0.8, 1e-15);
  EXPECT_EQ(post.selected, 2);
}

TEST(ModelPosterior, SimplexAndArgmax) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> le(16);
    for (auto& v : le) v = -3e4 + 40.0 * rng.normal();
    const auto post = posterior_model_probs(reports_of(le));
    double total = 0.0;
    for (double p : post.probabilities) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    const auto best = std::max_element(le.begin(), le.end()) - le.begin();
    EXPECT_EQ(post.selected, int(best) + 1);
    for (double& v : le) v += 1e6;
    EXPECT_EQ(posterior_model_probs(reports_of(le)).selected, post.selected);
  }
}

TEST(ModelPosterior, ShiftInvariantBitExact) {
  // Values on a dyadic lattice keep every shifted sum exact.
  std::vector<double> le = {-12.5, -3.25, 0.75, -40.0, -3.0};
  const auto base = posterior_model_probs(reports_of(le));
  for (double& v : le) v += 1e6;
  const auto shifted = posterior_model_probs(reports_of(le));
  EXPECT_EQ(base.probabilities, shifted.probabilities);
  EXPECT_EQ(base.selected, shifted.selected);
}

TEST(ModelPosterior, ShiftInvariantGeneralValues) {
  std::vector<double> le = {-12345.678901, -12343.1, -12350.0001};
  const auto base = posterior_model_probs(reports_of(le));
  for (double& v : le) v += 1e6;
  const auto shifted = posterior_model_probs(reports_of(le));
  for (std::size_t k = 0; k < le.size(); ++k) {
    EXPECT_NEAR(base.probabilities[k], shifted.probabilities[k], 1e-9);
  }
}

TEST(ModelPosterior, TiesGoToLowestId) {
  std::vector<EvidenceReport> reps = {with_evidence(5, -1.0), with_evidence(2, -1.0),
                                      with_evidence(9, -1.0)};
  EXPECT_EQ(posterior_model_probs(reps).selected, 2);
}

TEST(ModelPosterior, SingleModelHasProbabilityOne) {
  EXPECT_EQ(posterior_model_probs(reports_of({-1234.5})).probabilities[0], 1.0);
}

TEST(ModelPosterior, LengthMismatch) {
  const auto reps = reports_of({0.0, 1.0});
  const std::vector<double> prior = {1.0};
  EXPECT_THROW(posterior_model_probs(reps, prior), UsageError);
  EXPECT_THROW(posterior_model_probs(std::vector<EvidenceReport>{}), UsageError);
}

}  // namespace
}  // namespace chibsel
