#include <gtest/gtest.h>

#include <chibsel/config.hpp>

namespace chibsel {
namespace {

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig c = parse_config_text("{}");
  EXPECT_EQ(c.width, 128u);
  EXPECT_EQ(c.height, 128u);
  EXPECT_EQ(c.blur.type, "sinc");
  EXPECT_EQ(c.blur.width, 1.0);
  EXPECT_EQ(c.image_kinds.size(), 4u);
  EXPECT_EQ(c.chain.iterations, 10000u);
  EXPECT_EQ(c.chain.resolved_burn_in(), 1000u);
  EXPECT_EQ(c.truth.gamma_x_true, 6.0);
  EXPECT_EQ(c.truth.gamma_e_true, 4.0);
  EXPECT_EQ(c.replicates, 50u);
  EXPECT_EQ(make_catalog(c).size(), 16u);
}

TEST(Config, FieldsAreRead) {
  const RunConfig c = parse_config_text(R"({
    "width": 32, "height": 16,
    "blur": {"type": "identity"},
    "image_kinds": ["Gauss", {"kind": "Lorentz", "omega": 0.1}],
    "noise_kinds": [{"kind": "Gauss", "gauss_isotropic": true}],
    "hyperprior": {"alpha_x": 2.0},
    "truth": {"gamma_x": 3.0, "model": 2},
    "chain": {"iterations": 500, "burn_in": 100, "initial": [2.0, 5.0]},
    "grid": {"gamma_e": {"lower": 0.01, "nodes": 64}},
    "plan": {"replicates": 3, "true_models": [1, 2]},
    "trace": {"checkpoints": [10, 500], "oracle": false},
    "seed": 12345678901234, "jobs": 2, "model": 2, "input": "y.f64"
  })");
  EXPECT_EQ(c.width, 32u);
  EXPECT_EQ(c.height, 16u);
  EXPECT_EQ(c.image_kinds[1].family, PsdFamily::Lorentz);
  EXPECT_EQ(c.image_kinds[1].omega, 0.1);
  EXPECT_TRUE(c.noise_kinds[0].gauss_isotropic);
  EXPECT_EQ(c.hyperprior.alpha_x, 2.0);
  EXPECT_EQ(c.hyperprior.beta_x, kDefaultHyperParam);
  EXPECT_EQ(c.truth.gamma_x_true, 3.0);
  EXPECT_EQ(c.truth.gamma_e_true, 4.0);
  EXPECT_EQ(c.truth_model, 2);
  EXPECT_EQ(c.chain.resolved_burn_in(), 100u);
  EXPECT_EQ(c.chain.initial->gamma_e, 5.0);
  EXPECT_EQ(c.grid.gamma_e.nodes, 64u);
  EXPECT_EQ(c.grid.gamma_x.nodes, 200u);
  EXPECT_EQ(c.true_models, (std::vector<int>{1, 2}));
  EXPECT_EQ(c.checkpoints.back(), 500u);
  EXPECT_FALSE(c.oracle_in_trace);
  EXPECT_EQ(c.seed, 12345678901234u);
  EXPECT_EQ(c.resolved_jobs(), 2u);
  const ExperimentPlan plan = make_plan(c);
  EXPECT_EQ(plan.catalog.size(), 2u);
  EXPECT_EQ(plan.catalog.models[0].blur.description, "identity");
  EXPECT_EQ(plan.base_seed, 12345678901234u);
}

TEST(Config, SyntaxErrorReportsLine) {
  try {
    parse_config_text("{\n  \"width\": 32,\n  \"height\" 32\n}\n", "plan.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("plan.json:3:"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsBadDocuments) {
  EXPECT_THROW(parse_config_text(R"({"widht": 32})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"width": "wide"})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"blur": {"type": "box"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"blur": {"type": "psf"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"image_kinds": []})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"image_kinds": ["Cauchy"]})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"noise_kinds": [{"kind": "Gauss", "omega": -1}]})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"chain": {"initial": [1.0]}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"plan": {"reps": 3}})"), ConfigError);
  EXPECT_THROW(make_catalog(parse_config_text(R"({"width": 63})")), ConfigError);
  EXPECT_THROW(make_catalog(parse_config_text(R"({"hyperprior": {"beta_e": 0}})")), ConfigError);
}

TEST(Config, EffectiveJsonReparses) {
  const RunConfig c = parse_config_text(R"({"width": 16, "height": 16, "chain": {"iterations": 300},
                                            "image_kinds": [{"kind": "Gauss", "gauss_isotropic": true}]})");
  json eff = effective_json(c);
  const RunConfig back = parse_config(eff);
  EXPECT_EQ(effective_json(back), eff);
  EXPECT_TRUE(back.image_kinds[0].gauss_isotropic);
  EXPECT_EQ(back.chain.resolved_burn_in(), 30u);
}

}  // namespace
}  // namespace chibsel
