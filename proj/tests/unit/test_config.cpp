#include <doctest.h>

#include "healthshock/config.hpp"

using namespace healthshock;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::UsageError;
}

ScenarioConfig defaults(const std::vector<std::string>& extra = {}) {
  return resolve_config(load_config_document("paper_defaults"), extra);
}

}  // namespace

TEST_CASE("the defaults token resolves to the calibrated household") {
  const ScenarioConfig cfg = defaults();
  CHECK(params_to_json(cfg.model) == params_to_json(paper_defaults()));
  CHECK(cfg.simulation.n_paths == 10000);
  CHECK(cfg.simulation.dt == 1e-3);
  CHECK(cfg.grid.n_t == 50);
  CHECK(cfg.coupling == CouplingMode::Exact);
}

TEST_CASE("the shipped defaults file matches the token") {
  const ScenarioConfig file =
      resolve_config(load_config_document(std::string(HEALTHSHOCK_SOURCE_DIR) + "/configs/paper_defaults.json"));
  CHECK(file.hash() == defaults().hash());
}

TEST_CASE("params survive a JSON round trip") {
  const ModelParams p = paper_defaults();
  CHECK(params_to_json(params_from_json(params_to_json(p))) == params_to_json(p));
  Json j = params_to_json(p);
  j["market"].erase("sigma");
  CHECK(code_of([&] { params_from_json(j); }) == ErrorCode::ConfigError);
  j = params_to_json(p);
  j["market"]["sigma"] = "wide";
  CHECK(code_of([&] { params_from_json(j); }) == ErrorCode::ConfigError);
}

TEST_CASE("dotted overrides") {
  const ScenarioConfig cfg = defaults({"market.sigma=0.25", "prefs.k_a.1=0.7", "simulation.n_paths=500",
                                       "model.habit.h0=10", "verification.coupling=ansatz"});
  CHECK(cfg.model.market.sigma == 0.25);
  CHECK(cfg.model.prefs.k_a[1] == 0.7);
  CHECK(cfg.model.habit.h0 == 10.0);
  CHECK(cfg.simulation.n_paths == 500);
  CHECK(cfg.coupling == CouplingMode::Ansatz);
}

TEST_CASE("override errors") {
  CHECK(code_of([] { defaults({"market.mu=0.02"}); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { defaults({"market.kappa=1"}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { defaults({"market.mu=high"}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { defaults({"prefs.k_a.5=1"}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { defaults({"market.mu"}); }) == ErrorCode::ConfigError);
}

TEST_CASE("document structure errors") {
  CHECK(code_of([] { resolve_config(Json{{"model", "paper_defaults"}, {"extras", 1}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { resolve_config(Json{{"model", "other"}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { resolve_config(Json::array()); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { load_config_document("/nonexistent/scenario.json"); }) == ErrorCode::ConfigError);
}

TEST_CASE("overrides inside the document") {
  Json doc{{"model", "paper_defaults"}, {"overrides", {{"income.y0", 30000.0}, {"simulation.seed", 99}}}};
  const ScenarioConfig cfg = resolve_config(doc);
  CHECK(cfg.model.income.y0 == 30000.0);
  CHECK(cfg.simulation.seed == 99);
  CHECK_FALSE(cfg.document.contains("overrides"));
}

TEST_CASE("hash is stable and sensitive to inputs") {
  CHECK(defaults().hash() == defaults().hash());
  CHECK(defaults().hash().size() == 16);
  CHECK(defaults({"simulation.seed=1"}).hash() != defaults().hash());
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}
