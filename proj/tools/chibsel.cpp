// chibsel: synthetic data, evidence-based model selection, brute-force
// reference evidences, confusion sweeps and chain traces.
//
// Exit status: 0 success, 1 configuration or usage error, 2 numerical error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chibsel/bench.hpp>
#include <chibsel/config.hpp>
#include <chibsel/io.hpp>

namespace fs = std::filesystem;
using namespace chibsel;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<std::size_t> jobs;
  std::string input;
  std::optional<int> model;
};

RunConfig resolve(const Common& o) {
  RunConfig c = o.config.empty() ? parse_config(nlohmann::json()) : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (!o.input.empty()) c.input = o.input;
  if (o.model) c.model = *o.model;
  return c;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& c,
                    const ModelCatalog& cat) {
  const nlohmann::json m = {{"tool", "chibsel"},
                            {"version", kVersion},
                            {"command", command},
                            {"config", effective_json(c)},
                            {"catalog", catalog_json(cat)}};
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

RealField read_input(const RunConfig& c, const ModelCatalog& cat) {
  if (c.input.empty()) throw ConfigError("no input image (set \"input\" or pass --input)");
  RealField y = io::read_image(c.input);
  const auto& g = cat.models.front().grid;
  if (y.width != g.width || y.height != g.height) {
    throw ConfigError("input is " + std::to_string(y.width) + "x" + std::to_string(y.height) +
                      " but the catalog grid is " + std::to_string(g.width) + "x" + std::to_string(g.height));
  }
  return y;
}

void cmd_generate(const Common& o) {
  const RunConfig c = resolve(o);
  const ExperimentPlan plan = make_plan(c);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  RealField x;
  const RealField y = plan_observation(plan, c.truth_model, 0, &x);
  io::write_image(dir / "x.f64", x, "image");
  io::write_image(dir / "y.f64", y, "observation");
  if (c.write_pgm) {
    io::write_pgm(dir / "x.pgm", x);
    io::write_pgm(dir / "y.pgm", y);
  }
  write_manifest(dir, "generate", c, plan.catalog);
  std::cout << "wrote " << (dir / "x.f64").string() << " and " << (dir / "y.f64").string() << " ("
            << plan.catalog.by_id(c.truth_model).label() << ", " << c.width << "x" << c.height << ")\n";
}

void cmd_select(const Common& o) {
  const RunConfig c = resolve(o);
  const ExperimentPlan plan = make_plan(c);
  const RealField y = read_input(c, plan.catalog);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const Spectrum y_hat = forward_dft(y, plan.catalog.models.front().grid);
  const std::size_t K = plan.catalog.size();
  std::vector<EvidenceRow> rows(K);
  parallel_for(K, plan.jobs, [&](std::size_t k) {
    rows[k] = evaluate_candidate(plan, y_hat, 0, 0, plan.catalog.models[k]);
  });
  std::vector<EvidenceReport> reps;
  for (const auto& r : rows) reps.push_back(r.report);
  const ModelPosterior post = posterior_model_probs(reps, plan.catalog.prior_weights);
  {
    auto f = open_out(dir / "evidences.csv");
    io::write_evidence_csv(f, reps);
  }
  {
    auto f = open_out(dir / "posterior.csv");
    io::write_posterior_csv(f, post);
  }
  {
    auto f = open_out(dir / "timing.csv");
    io::write_timing_csv(f, rows);
  }
  write_manifest(dir, "select", c, plan.catalog);
  for (std::size_t k = 0; k < K; ++k) {
    std::printf("%3d %-18s log Z = %.6f  (se %.3f)  p = %.6g\n", reps[k].model_id, reps[k].label.c_str(),
                reps[k].log_evidence, reps[k].std_error, post.probabilities[k]);
  }
  std::printf("selected: %d (%s)\n", post.selected, plan.catalog.by_id(post.selected).label().c_str());
}

void cmd_oracle(const Common& o) {
  const RunConfig c = resolve(o);
  const ModelCatalog cat = make_catalog(c);
  const RealField y = read_input(c, cat);
  const ModelSpec& m = cat.by_id(c.model);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  // Mass at the box edge raises BoundaryError (exit 2) rather than returning a truncated value.
  const double le = grid_log_evidence(y, m, c.grid);
  {
    auto f = open_out(dir / "oracle.csv");
    f << "model_id,label,log_evidence\n" << m.id << ',' << m.label() << ',' << io::fmt17(le) << '\n';
  }
  write_manifest(dir, "oracle", c, cat);
  std::printf("%d %s grid log Z = %.6f\n", m.id, m.label().c_str(), le);
}

void cmd_confusion(const Common& o) {
  const RunConfig c = resolve(o);
  const ExperimentPlan plan = make_plan(c);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  // Append-only log in completion order; a rerun resumes from it.
  const fs::path log_path = dir / "evidences.log.csv";
  std::vector<EvidenceRow> completed;
  if (fs::exists(log_path)) {
    std::ifstream in(log_path);
    completed = io::read_evidence_rows_csv(in);
  }
  std::ofstream log(log_path, std::ios::app | std::ios::binary);
  if (!log) throw ConfigError("cannot write " + log_path.string());
  if (completed.empty() && fs::file_size(log_path) == 0) log << io::kEvidenceTaskHeader << '\n';
  const std::size_t total = plan.resolved_true_models().size() * plan.replicates * plan.catalog.size();
  std::size_t done = 0;
  const auto result = run_confusion(plan, completed, [&](const EvidenceRow& r) {
    io::write_evidence_row(log, r);
    log.flush();
    ++done;
    if (done % 16 == 0) std::cerr << "\r" << done + completed.size() << "/" << total << std::flush;
  });
  if (done >= 16) std::cerr << '\n';
  {
    auto f = open_out(dir / "confusion.csv");
    io::write_confusion_csv(f, result.matrix, plan.catalog);
  }
  {
    auto f = open_out(dir / "evidences.csv");
    io::write_evidence_rows_csv(f, result.evidences);
  }
  {
    auto f = open_out(dir / "timing.csv");
    io::write_timing_csv(f, result.evidences);
    auto s = open_out(dir / "timing_summary.csv");
    io::write_timing_summary_csv(s, time_report(result.evidences));
  }
  write_manifest(dir, "confusion", c, plan.catalog);
  std::printf("%zu evidences (%zu reused), accuracy %.1f%%\n", result.evidences.size(), completed.size(),
              100.0 * result.matrix.accuracy());
}

void cmd_trace(const Common& o) {
  const RunConfig c = resolve(o);
  const ModelCatalog cat = make_catalog(c);
  const RealField y = read_input(c, cat);
  const ModelSpec& m = cat.by_id(c.model);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  ChainConfig cfg = c.chain;
  cfg.seed = chain_seed(c.seed, 0, 0, m.id);
  const GibbsChain chain = run_gibbs(y, m, cfg);
  {
    auto f = open_out(dir / "chain.csv");
    io::write_chain_csv(f, chain);
  }
  if (!c.checkpoints.empty()) {
    std::optional<IntegrationGrid> grid;
    if (c.oracle_in_trace) grid = c.grid;
    const auto trace = run_convergence_trace(y, m, cfg, c.checkpoints, grid);
    auto f = open_out(dir / "trace.csv");
    io::write_trace_csv(f, trace);
  }
  write_manifest(dir, "trace", c, cat);
  const auto rep = chib_log_evidence(y, m, chain);
  std::printf("%d %s: %zu sweeps, mean gamma = (%.4f, %.4f), log Z = %.6f\n", m.id, m.label().c_str(),
              chain.records.size(), rep.gamma_bar.gamma_x, rep.gamma_bar.gamma_e, rep.log_evidence);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian selection of image and noise spectral models for deconvolution"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  struct Sub {
    const char* name;
    const char* help;
    void (*run)(const Common&);
    bool needs_input;
  };
  const Sub subs[] = {
      {"generate", "draw a synthetic image and its blurred, noisy observation", cmd_generate, false},
      {"select", "compute every candidate evidence for an observation", cmd_select, true},
      {"oracle", "brute-force grid evidence for one model", cmd_oracle, true},
      {"confusion", "run the full (true model, replicate, candidate) sweep", cmd_confusion, false},
      {"trace", "write one chain and its running evidence estimate", cmd_trace, true},
  };
  Common opts;
  for (const auto& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("--config", opts.config, "JSON configuration file");
    sc->add_option("--seed", opts.seed, "base seed (overrides config)");
    sc->add_option("--out", opts.out, "output directory")->capture_default_str();
    sc->add_option("--jobs", opts.jobs, "worker threads (default: all cores)");
    if (s.needs_input) sc->add_option("--input", opts.input, "observation image (.f64 with .json sidecar)");
    if (std::string(s.name) == "oracle" || std::string(s.name) == "trace") {
      sc->add_option("--model", opts.model, "catalog model id");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  try {
    for (const auto& s : subs) {
      if (app.got_subcommand(s.name)) s.run(opts);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
