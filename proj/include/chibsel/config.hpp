#pragma once
// JSON run configuration shared by the command-line subcommands.
//
// Every field is optional. Unknown top-level keys are rejected so that typos
// fail loudly. See configs/ for complete documents and README.md for the schema.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "bench.hpp"
#include "error.hpp"
#include "gibbs.hpp"
#include "io.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "psd.hpp"
#include "synth.hpp"

namespace chibsel {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

struct BlurConfig {
  std::string type = "sinc";  // sinc | identity | psf
  double width = 1.0;         // sinc only
  std::string path;           // psf only: raw image with sidecar
};

struct RunConfig {
  std::size_t width = 128;
  std::size_t height = 128;
  BlurConfig blur;
  std::vector<PsdKind> image_kinds;
  std::vector<PsdKind> noise_kinds;
  HyperPrior hyperprior;
  TruthConfig truth;
  int truth_model = 1;            // generate
  ChainConfig chain;
  IntegrationGrid grid;
  std::size_t replicates = 50;    // confusion
  std::vector<int> true_models;   // confusion; empty = all
  std::vector<std::size_t> checkpoints;  // trace
  int model = 1;                  // oracle, trace
  std::string input;              // select, oracle, trace
  std::uint64_t seed = 0;
  std::size_t jobs = 0;           // 0: hardware concurrency
  bool oracle_in_trace = true;
  bool write_pgm = true;

  json source;  // document as read, before flag overrides

  [[nodiscard]] std::size_t resolved_jobs() const {
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (j.contains(key)) out = get_field<T>(j, key, where);
}

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

inline PsdKind parse_kind(const json& j, const std::string& where) {
  PsdKind k;
  if (j.is_string()) {
    k.family = parse_family(j.get<std::string>());
    return k;
  }
  check_keys(j, {"kind", "omega", "gauss_isotropic"}, where);
  k.family = parse_family(get_field<std::string>(j, "kind", where));
  read_opt(j, "omega", k.omega, where);
  read_opt(j, "gauss_isotropic", k.gauss_isotropic, where);
  if (k.family != PsdFamily::White && !(k.omega > 0.0)) throw ConfigError(where + ": omega must be positive");
  return k;
}

inline std::vector<PsdKind> parse_kinds(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array");
  std::vector<PsdKind> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_kind(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline AxisGrid parse_axis(const json& j, const std::string& where) {
  check_keys(j, {"lower", "upper", "nodes"}, where);
  AxisGrid a;
  read_opt(j, "lower", a.lower, where);
  read_opt(j, "upper", a.upper, where);
  read_opt(j, "nodes", a.nodes, where);
  return a;
}

inline std::vector<PsdKind> default_kinds() {
  std::vector<PsdKind> k;
  for (PsdFamily f : kAllFamilies) k.push_back(PsdKind{f});
  return k;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using detail::read_opt;
  RunConfig c;
  c.source = j;
  c.image_kinds = detail::default_kinds();
  c.noise_kinds = detail::default_kinds();
  if (j.is_null()) return c;
  detail::check_keys(j, {"width", "height", "blur", "image_kinds", "noise_kinds", "hyperprior", "truth",
                         "chain", "grid", "plan", "trace", "model", "input", "seed", "jobs", "write_pgm"},
                     "config");
  read_opt(j, "width", c.width, "config");
  read_opt(j, "height", c.height, "config");
  if (j.contains("blur")) {
    const auto& b = j["blur"];
    detail::check_keys(b, {"type", "width", "path"}, "blur");
    read_opt(b, "type", c.blur.type, "blur");
    read_opt(b, "width", c.blur.width, "blur");
    read_opt(b, "path", c.blur.path, "blur");
    if (c.blur.type != "sinc" && c.blur.type != "identity" && c.blur.type != "psf") {
      throw ConfigError("blur.type must be sinc, identity or psf");
    }
    if (c.blur.type == "psf" && c.blur.path.empty()) throw ConfigError("blur.path is required for a psf blur");
  }
  if (j.contains("image_kinds")) c.image_kinds = detail::parse_kinds(j["image_kinds"], "image_kinds");
  if (j.contains("noise_kinds")) c.noise_kinds = detail::parse_kinds(j["noise_kinds"], "noise_kinds");
  if (j.contains("hyperprior")) {
    const auto& h = j["hyperprior"];
    detail::check_keys(h, {"alpha_x", "beta_x", "alpha_e", "beta_e"}, "hyperprior");
    read_opt(h, "alpha_x", c.hyperprior.alpha_x, "hyperprior");
    read_opt(h, "beta_x", c.hyperprior.beta_x, "hyperprior");
    read_opt(h, "alpha_e", c.hyperprior.alpha_e, "hyperprior");
    read_opt(h, "beta_e", c.hyperprior.beta_e, "hyperprior");
  }
  if (j.contains("truth")) {
    const auto& t = j["truth"];
    detail::check_keys(t, {"gamma_x", "gamma_e", "model"}, "truth");
    read_opt(t, "gamma_x", c.truth.gamma_x_true, "truth");
    read_opt(t, "gamma_e", c.truth.gamma_e_true, "truth");
    read_opt(t, "model", c.truth_model, "truth");
  }
  if (j.contains("chain")) {
    const auto& ch = j["chain"];
    detail::check_keys(ch, {"iterations", "burn_in", "initial"}, "chain");
    read_opt(ch, "iterations", c.chain.iterations, "chain");
    if (ch.contains("burn_in")) c.chain.burn_in = detail::get_field<std::size_t>(ch, "burn_in", "chain");
    if (ch.contains("initial")) {
      const auto v = detail::get_field<std::vector<double>>(ch, "initial", "chain");
      if (v.size() != 2) throw ConfigError("chain.initial must be [gamma_x, gamma_e]");
      c.chain.initial = HyperState{v[0], v[1]};
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    detail::check_keys(g, {"gamma_x", "gamma_e"}, "grid");
    if (g.contains("gamma_x")) c.grid.gamma_x = detail::parse_axis(g["gamma_x"], "grid.gamma_x");
    if (g.contains("gamma_e")) c.grid.gamma_e = detail::parse_axis(g["gamma_e"], "grid.gamma_e");
  }
  if (j.contains("plan")) {
    const auto& p = j["plan"];
    detail::check_keys(p, {"replicates", "true_models"}, "plan");
    read_opt(p, "replicates", c.replicates, "plan");
    read_opt(p, "true_models", c.true_models, "plan");
  }
  if (j.contains("trace")) {
    const auto& t = j["trace"];
    detail::check_keys(t, {"checkpoints", "oracle"}, "trace");
    read_opt(t, "checkpoints", c.checkpoints, "trace");
    read_opt(t, "oracle", c.oracle_in_trace, "trace");
  }
  read_opt(j, "model", c.model, "config");
  read_opt(j, "input", c.input, "config");
  read_opt(j, "seed", c.seed, "config");
  read_opt(j, "jobs", c.jobs, "config");
  read_opt(j, "write_pgm", c.write_pgm, "config");
  return c;
}

/// Parses a document; syntax errors report the line.
inline RunConfig parse_config_text(const std::string& text, const std::string& name = "config") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(name + ":" + std::to_string(detail::line_of_offset(text, e.byte)) + ": " + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config_text(ss.str(), path.string());
  // Relative file references resolve against the config's directory.
  const auto base = path.parent_path();
  if (!c.input.empty() && std::filesystem::path(c.input).is_relative()) c.input = (base / c.input).string();
  if (!c.blur.path.empty() && std::filesystem::path(c.blur.path).is_relative()) {
    c.blur.path = (base / c.blur.path).string();
  }
  return c;
}

inline BlurTransfer make_blur(const RunConfig& c, const FrequencyGrid& g) {
  if (c.blur.type == "identity") return identity_blur(g);
  if (c.blur.type == "psf") {
    const RealField psf = io::read_image(c.blur.path);
    if (psf.width != g.width || psf.height != g.height) {
      throw ConfigError("psf size does not match the image grid");
    }
    return blur_from_psf(psf, g, "psf(" + c.blur.path + ")");
  }
  return sinc_blur_transfer(c.blur.width, g);
}

inline ModelCatalog make_catalog(const RunConfig& c) {
  const FrequencyGrid g = build_grid(c.width, c.height);
  return build_catalog(c.image_kinds, c.noise_kinds, make_blur(c, g), c.hyperprior, g);
}

inline ExperimentPlan make_plan(const RunConfig& c) {
  ExperimentPlan plan;
  plan.catalog = make_catalog(c);
  plan.truth = c.truth;
  plan.replicates = c.replicates;
  plan.chain = c.chain;
  plan.true_models = c.true_models;
  plan.jobs = c.resolved_jobs();
  plan.base_seed = c.seed;
  return plan;
}

/// Effective configuration after overrides, for the run manifest.
inline json effective_json(const RunConfig& c) {
  json kinds_i = json::array();
  json kinds_n = json::array();
  for (const auto& k : c.image_kinds) kinds_i.push_back(psd_kind_json(k));
  for (const auto& k : c.noise_kinds) kinds_n.push_back(psd_kind_json(k));
  json chain = {{"iterations", c.chain.iterations}, {"burn_in", c.chain.resolved_burn_in()}};
  if (c.chain.initial) chain["initial"] = {c.chain.initial->gamma_x, c.chain.initial->gamma_e};
  auto axis = [](const AxisGrid& a) { return json{{"lower", a.lower}, {"upper", a.upper}, {"nodes", a.nodes}}; };
  json blur = {{"type", c.blur.type}};
  if (c.blur.type == "sinc") blur["width"] = c.blur.width;
  if (c.blur.type == "psf") blur["path"] = c.blur.path;
  return json{{"width", c.width},
              {"height", c.height},
              {"blur", blur},
              {"image_kinds", kinds_i},
              {"noise_kinds", kinds_n},
              {"hyperprior",
               {{"alpha_x", c.hyperprior.alpha_x},
                {"beta_x", c.hyperprior.beta_x},
                {"alpha_e", c.hyperprior.alpha_e},
                {"beta_e", c.hyperprior.beta_e}}},
              {"truth", {{"gamma_x", c.truth.gamma_x_true}, {"gamma_e", c.truth.gamma_e_true}, {"model", c.truth_model}}},
              {"chain", chain},
              {"grid", {{"gamma_x", axis(c.grid.gamma_x)}, {"gamma_e", axis(c.grid.gamma_e)}}},
              {"plan", {{"replicates", c.replicates}, {"true_models", c.true_models}}},
              {"trace", {{"checkpoints", c.checkpoints}, {"oracle", c.oracle_in_trace}}},
              {"model", c.model},
              {"input", c.input},
              {"seed", c.seed},
              {"write_pgm", c.write_pgm}};
}

}  // namespace chibsel
