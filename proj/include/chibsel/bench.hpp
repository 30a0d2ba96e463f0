#pragma once
// Experiment harness: confusion matrix over (true model, replicate, candidate),
// evidence convergence traces and timing summaries.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "evidence.hpp"
#include "gibbs.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "random.hpp"
#include "synth.hpp"

namespace chibsel {

struct ExperimentPlan {
  ModelCatalog catalog;
  TruthConfig truth;              // seed field is ignored; per-replicate seeds are derived
  std::size_t replicates = 50;
  ChainConfig chain;              // seed field is ignored; per-chain seeds are derived
  std::vector<int> true_models;   // empty: every catalog model
  std::size_t jobs = 1;
  std::uint64_t base_seed = 0;

  [[nodiscard]] std::vector<int> resolved_true_models() const {
    if (!true_models.empty()) return true_models;
    std::vector<int> ids;
    for (const auto& m : catalog.models) ids.push_back(m.id);
    return ids;
  }

  void validate() const {
    if (catalog.models.empty()) throw ConfigError("plan: empty catalog");
    if (replicates < 1) throw ConfigError("plan: replicates must be >= 1");
    for (int id : true_models) {
      if (!catalog.contains(id)) throw ConfigError("plan: unknown true model id " + std::to_string(id));
    }
    truth.validate();
    chain.validate();
  }
};

inline std::uint64_t data_seed(std::uint64_t base, int k_true, std::size_t replicate) {
  return derive_seed({base, static_cast<std::uint64_t>(k_true), replicate});
}

inline std::uint64_t chain_seed(std::uint64_t base, int k_true, std::size_t replicate,
                                int k_candidate) {
  return derive_seed({base, static_cast<std::uint64_t>(k_true), replicate,
                      static_cast<std::uint64_t>(k_candidate)});
}

/// One evidence computation of the sweep.
struct EvidenceRow {
  int k_true = 0;
  std::size_t replicate = 0;
  int k_candidate = 0;
  EvidenceReport report;
  double seconds = 0.0;
};

using TaskKey = std::tuple<int, std::size_t, int>;

inline TaskKey key_of(const EvidenceRow& r) { return {r.k_true, r.replicate, r.k_candidate}; }

struct ConfusionMatrix {
  std::vector<int> model_ids;   // axis labels, catalog order
  std::vector<std::vector<std::size_t>> counts;  // [true][selected]
  std::vector<int> true_models;  // rows that were run
  std::size_t replicates = 0;

  [[nodiscard]] std::size_t position(int id) const {
    for (std::size_t i = 0; i < model_ids.size(); ++i) {
      if (model_ids[i] == id) return i;
    }
    throw UsageError("confusion: unknown model id " + std::to_string(id));
  }

  [[nodiscard]] std::size_t row_sum(int id) const {
    std::size_t s = 0;
    for (auto c : counts[position(id)]) s += c;
    return s;
  }

  [[nodiscard]] double percentage(int k_true, int k_sel) const {
    const std::size_t n = row_sum(k_true);
    return n == 0 ? 0.0
                  : 100.0 * static_cast<double>(counts[position(k_true)][position(k_sel)]) /
                        static_cast<double>(n);
  }

  /// Fraction of run replicates whose selected model is the true one.
  [[nodiscard]] double accuracy() const {
    std::size_t hit = 0;
    std::size_t all = 0;
    for (int id : true_models) {
      hit += counts[position(id)][position(id)];
      all += row_sum(id);
    }
    return all == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(all);
  }
};

struct ConfusionResult {
  ConfusionMatrix matrix;
  std::vector<EvidenceRow> evidences;  // sorted by (k_true, replicate, k_candidate)
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is
/// rethrown after all workers stop.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        if (failed.load()) return;
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

template <class Err>
[[noreturn]] inline void rethrow_with_context(const Err& e, const std::string& ctx) {
  throw Err(ctx + ": " + e.what());
}

/// Observation for (k_true, replicate) under the plan's truth values.
inline RealField plan_observation(const ExperimentPlan& plan, int k_true, std::size_t replicate,
                                  RealField* image_out = nullptr) {
  const ModelSpec& truth_model = plan.catalog.by_id(k_true);
  TruthConfig t = plan.truth;
  t.seed = data_seed(plan.base_seed, k_true, replicate);
  RealField x = generate_image(truth_model, t);
  RealField y = generate_observation(x, truth_model, t);
  if (image_out) *image_out = std::move(x);
  return y;
}

/// Evidence of one candidate for one observation, with the plan's derived seed.
inline EvidenceRow evaluate_candidate(const ExperimentPlan& plan, const Spectrum& y_hat, int k_true,
                                      std::size_t replicate, const ModelSpec& cand) {
  const auto start = std::chrono::steady_clock::now();
  ChainConfig cfg = plan.chain;
  cfg.seed = chain_seed(plan.base_seed, k_true, replicate, cand.id);
  const GibbsChain chain = run_gibbs_spectrum(y_hat, cand, cfg);
  EvidenceRow row;
  row.k_true = k_true;
  row.replicate = replicate;
  row.k_candidate = cand.id;
  row.report = chib_log_evidence_spectrum(y_hat, cand, chain);
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// Full sweep. Rows already present in `completed` are reused instead of
/// recomputed; `on_row` sees each newly computed row (from worker threads,
/// serialized by a mutex).
inline ConfusionResult run_confusion(const ExperimentPlan& plan,
                                     const std::vector<EvidenceRow>& completed = {},
                                     const std::function<void(const EvidenceRow&)>& on_row = {}) {
  plan.validate();
  const auto trues = plan.resolved_true_models();
  std::map<TaskKey, EvidenceRow> done;
  for (const auto& r : completed) done[key_of(r)] = r;

  struct Group {
    int k_true;
    std::size_t replicate;
  };
  std::vector<Group> groups;
  for (int kt : trues) {
    for (std::size_t r = 0; r < plan.replicates; ++r) groups.push_back({kt, r});
  }
  const std::size_t K = plan.catalog.size();
  std::vector<std::vector<EvidenceRow>> results(groups.size());
  std::mutex mu;

  parallel_for(groups.size(), plan.jobs, [&](std::size_t gi) {
    const Group g = groups[gi];
    std::vector<EvidenceRow> rows(K);
    std::vector<bool> have(K, false);
    for (std::size_t k = 0; k < K; ++k) {
      auto it = done.find({g.k_true, g.replicate, plan.catalog.models[k].id});
      if (it != done.end()) {
        rows[k] = it->second;
        have[k] = true;
      }
    }
    if (std::find(have.begin(), have.end(), false) != have.end()) {
      const ModelSpec& tm = plan.catalog.by_id(g.k_true);
      const Spectrum y_hat = forward_dft(plan_observation(plan, g.k_true, g.replicate), tm.grid);
      for (std::size_t k = 0; k < K; ++k) {
        if (have[k]) continue;
        const std::string ctx = "true model " + std::to_string(g.k_true) + ", replicate " +
                                std::to_string(g.replicate) + ", candidate " +
                                std::to_string(plan.catalog.models[k].id);
        try {
          rows[k] = evaluate_candidate(plan, y_hat, g.k_true, g.replicate, plan.catalog.models[k]);
        } catch (const InsufficientSamplesError& e) {
          rethrow_with_context(e, ctx);
        } catch (const NumericalError& e) {
          rethrow_with_context(e, ctx);
        }
        if (on_row) {
          std::lock_guard<std::mutex> lock(mu);
          on_row(rows[k]);
        }
      }
    }
    results[gi] = std::move(rows);
  });

  ConfusionResult out;
  auto& m = out.matrix;
  for (const auto& mod : plan.catalog.models) m.model_ids.push_back(mod.id);
  m.counts.assign(K, std::vector<std::size_t>(K, 0));
  m.true_models = trues;
  m.replicates = plan.replicates;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    std::vector<EvidenceReport> reps;
    for (const auto& r : results[gi]) reps.push_back(r.report);
    const ModelPosterior post = posterior_model_probs(reps, plan.catalog.prior_weights);
    m.counts[m.position(groups[gi].k_true)][m.position(post.selected)] += 1;
    for (auto& r : results[gi]) out.evidences.push_back(std::move(r));
  }
  return out;
}

struct TracePoint {
  std::size_t iterations = 0;
  double log_evidence = 0.0;
  double std_error = 0.0;
  std::optional<double> oracle;
};

/// One chain of config.iterations sweeps; at checkpoint G the estimate uses the
/// prefix of G sweeps with burn-in G * B / iterations.
inline std::vector<TracePoint> run_convergence_trace(const RealField& y, const ModelSpec& model,
                                                     const ChainConfig& config,
                                                     const std::vector<std::size_t>& checkpoints,
                                                     const std::optional<IntegrationGrid>& oracle_grid = {},
                                                     std::size_t min_samples = 1) {
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] == 0 || checkpoints[i] > config.iterations ||
        (i > 0 && checkpoints[i] <= checkpoints[i - 1])) {
      throw ConfigError("trace checkpoints must be increasing and within (0, iterations]");
    }
  }
  const Spectrum y_hat = forward_dft(y, model.grid);
  const GibbsChain chain = run_gibbs_spectrum(y_hat, model, config);
  std::optional<double> reference;
  if (oracle_grid) reference = grid_log_evidence_spectrum(y_hat, model, *oracle_grid);
  const std::size_t B = chain.burn_in();
  std::vector<TracePoint> out;
  ChibOptions opts;
  opts.min_samples = min_samples;
  for (std::size_t G : checkpoints) {
    const std::size_t burn = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(G) * B) / config.iterations);
    const auto slice = std::span<const ChainRecord>(chain.records).subspan(burn, G - burn);
    const EvidenceReport rep = chib_from_samples(y_hat, model, slice, opts);
    out.push_back(TracePoint{G, rep.log_evidence, rep.std_error, reference});
  }
  return out;
}

struct TimingSummary {
  std::size_t count = 0;
  double median = 0.0;
  double p95 = 0.0;
  double total = 0.0;
};

inline TimingSummary time_report(const std::vector<EvidenceRow>& rows) {
  TimingSummary t;
  if (rows.empty()) return t;
  std::vector<double> s;
  for (const auto& r : rows) s.push_back(r.seconds);
  std::sort(s.begin(), s.end());
  t.count = s.size();
  for (double v : s) t.total += v;
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  t.median = at(0.5);
  t.p95 = at(0.95);
  return t;
}

inline TimingSummary time_report(const ExperimentPlan& plan) {
  if (plan.catalog.models.empty() || plan.replicates == 0) return {};
  return time_report(run_confusion(plan).evidences);
}

}  // namespace chibsel
