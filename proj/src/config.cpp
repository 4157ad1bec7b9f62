#include "healthshock/config.hpp"

#include <fstream>
#include <sstream>

namespace healthshock {

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) config_error("'" + path + "' must be an object");
  const auto it = j.find(key);
  if (it == j.end()) config_error("missing key '" + (path.empty() ? key : path + "." + key) + "'");
  return *it;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const Json& j, const std::string& key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_number()) config_error("'" + join(path, key) + "' must be a number");
  return v.get<double>();
}

int integer(const Json& j, const std::string& key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_number_integer()) config_error("'" + join(path, key) + "' must be an integer");
  return v.get<int>();
}

std::vector<double> numbers(const Json& j, const std::string& key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_array()) config_error("'" + join(path, key) + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) config_error("'" + join(path, key) + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

SimConfig cli_simulation_defaults() {
  SimConfig cfg;
  cfg.record_paths = 10;
  cfg.record_stride = 100;
  return cfg;
}

// Copies the keys of `given` onto `defaults`, rejecting keys the defaults lack.
Json merge_block(Json defaults, const Json& given, const std::string& name) {
  if (!given.is_object()) config_error("'" + name + "' must be an object");
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!defaults.contains(it.key())) config_error("unknown key '" + name + "." + it.key() + "'");
    defaults[it.key()] = it.value();
  }
  return defaults;
}

SimConfig simulation_from_json(const Json& j) {
  const std::string path = "simulation";
  SimConfig cfg;
  const Json& n = field(j, "n_paths", path);
  if (!n.is_number_integer() || n.get<long long>() < 1) config_error("'simulation.n_paths' must be an integer >= 1");
  cfg.n_paths = n.get<std::size_t>();
  cfg.dt = number(j, "dt", path);
  if (!(cfg.dt > 0.0)) config_error("'simulation.dt' must be positive");
  const Json& seed = field(j, "seed", path);
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    config_error("'simulation.seed' must be a nonnegative integer");
  cfg.seed = seed.get<std::uint64_t>();
  const Json& anti = field(j, "antithetic", path);
  if (!anti.is_boolean()) config_error("'simulation.antithetic' must be true or false");
  cfg.antithetic = anti.get<bool>();
  const Json& pen = field(j, "inadmissible_penalty", path);
  if (!pen.is_null()) {
    if (!pen.is_number()) config_error("'simulation.inadmissible_penalty' must be a number or null");
    cfg.inadmissible_penalty = pen.get<double>();
  }
  const int rp = integer(j, "record_paths", path);
  const int rs = integer(j, "record_stride", path);
  const int th = integer(j, "threads", path);
  if (rp < 0 || rs < 1 || th < 0) config_error("simulation record_paths/record_stride/threads out of range");
  cfg.record_paths = static_cast<std::size_t>(rp);
  cfg.record_stride = static_cast<std::size_t>(rs);
  cfg.threads = static_cast<unsigned>(th);
  return cfg;
}

void grid_from_json(const Json& j, GridSpec& grid, CouplingMode& coupling) {
  const std::string path = "verification";
  auto count = [&](const char* key) {
    const int v = integer(j, key, path);
    if (v < 0) config_error("'verification." + std::string(key) + "' must be nonnegative");
    return static_cast<std::size_t>(v);
  };
  grid.n_t = count("n_t");
  grid.n_x = count("n_x");
  grid.n_h = count("n_h");
  grid.h_max = number(j, "h_max", path);
  grid.w_min = number(j, "w_min", path);
  grid.w_max = number(j, "w_max", path);
  const Json& c = field(j, "coupling", path);
  if (!c.is_string()) config_error("'verification.coupling' must be a string");
  try {
    coupling = parse_coupling(c.get<std::string>());
  } catch (const Error& e) {
    config_error(e.what());
  }
}

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) config_error("malformed key '" + key + "'");
    parts.push_back(part);
  }
  if (parts.empty()) config_error("empty override key");
  return parts;
}

bool compatible(const Json& target, const Json& value) {
  if (target.is_null()) return true;
  if (target.is_number()) return value.is_number();
  if (target.is_boolean()) return value.is_boolean();
  if (target.is_string()) return value.is_string();
  if (target.is_array()) return value.is_array();
  if (target.is_object()) return value.is_object() || value.is_null();
  return false;
}

}  // namespace

std::string ScenarioConfig::hash() const { return hex64(fnv1a64(document.dump())); }

Json params_to_json(const ModelParams& p) {
  Json j;
  j["horizon_T"] = p.horizon_T;
  j["x0"] = p.x0;
  j["eta0"] = p.eta0;
  j["market"] = {{"r", p.market.r}, {"mu", p.market.mu}, {"sigma", p.market.sigma}};
  j["prefs"] = {{"gamma", p.prefs.gamma}, {"rho", p.prefs.rho},     {"k_a", p.prefs.k_a},
                {"omega_a", p.prefs.omega_a}, {"k_d", p.prefs.k_d}, {"omega_d", p.prefs.omega_d}};
  j["habit"] = {{"alpha", p.habit.alpha}, {"beta", p.habit.beta}, {"h0", p.habit.h0}};
  j["income"] = {{"y0", p.income.y0}, {"delta", p.income.delta}, {"xi", p.income.xi}};
  Json hazard;
  hazard["base_age"] = p.hazard.base_age;
  hazard["gompertz"] = p.hazard.gompertz ? Json{{"n", p.hazard.gompertz->n}, {"l", p.hazard.gompertz->l}} : Json();
  hazard["excess"] = Json::array();
  for (const auto& e : p.hazard.excess) hazard["excess"].push_back({{"k1", e.k1}, {"k2", e.k2}});
  hazard["theta_loading"] = p.hazard.theta_loading;
  j["hazard"] = hazard;
  Json states;
  states["n_states"] = p.states.n_states;
  states["transitions"] = Json::array();
  for (const auto& t : p.states.transitions)
    states["transitions"].push_back({{"from", t.from}, {"to", t.to}, {"scale", t.scale}, {"growth", t.growth}});
  j["states"] = states;
  return j;
}

ModelParams params_from_json(const Json& j) {
  ModelParams p;
  p.horizon_T = number(j, "horizon_T", "model");
  p.x0 = number(j, "x0", "model");
  p.eta0 = integer(j, "eta0", "model");

  const Json& m = field(j, "market", "model");
  p.market = {number(m, "r", "model.market"), number(m, "mu", "model.market"), number(m, "sigma", "model.market")};

  const Json& pr = field(j, "prefs", "model");
  p.prefs.gamma = number(pr, "gamma", "model.prefs");
  p.prefs.rho = number(pr, "rho", "model.prefs");
  p.prefs.k_a = numbers(pr, "k_a", "model.prefs");
  p.prefs.omega_a = numbers(pr, "omega_a", "model.prefs");
  p.prefs.k_d = number(pr, "k_d", "model.prefs");
  p.prefs.omega_d = number(pr, "omega_d", "model.prefs");

  const Json& h = field(j, "habit", "model");
  p.habit = {number(h, "alpha", "model.habit"), number(h, "beta", "model.habit"), number(h, "h0", "model.habit")};

  const Json& in = field(j, "income", "model");
  p.income.y0 = number(in, "y0", "model.income");
  p.income.delta = number(in, "delta", "model.income");
  p.income.xi = numbers(in, "xi", "model.income");

  const Json& hz = field(j, "hazard", "model");
  p.hazard.base_age = number(hz, "base_age", "model.hazard");
  const Json& gz = field(hz, "gompertz", "model.hazard");
  if (!gz.is_null()) p.hazard.gompertz = GompertzLaw{number(gz, "n", "model.hazard.gompertz"), number(gz, "l", "model.hazard.gompertz")};
  const Json& ex = field(hz, "excess", "model.hazard");
  if (!ex.is_array()) config_error("'model.hazard.excess' must be an array");
  for (std::size_t k = 0; k < ex.size(); ++k) {
    const std::string path = "model.hazard.excess." + std::to_string(k);
    p.hazard.excess.push_back({number(ex[k], "k1", path), number(ex[k], "k2", path)});
  }
  p.hazard.theta_loading = number(hz, "theta_loading", "model.hazard");

  const Json& st = field(j, "states", "model");
  p.states.n_states = integer(st, "n_states", "model.states");
  const Json& tr = field(st, "transitions", "model.states");
  if (!tr.is_array()) config_error("'model.states.transitions' must be an array");
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const std::string path = "model.states.transitions." + std::to_string(k);
    p.states.transitions.push_back({integer(tr[k], "from", path), integer(tr[k], "to", path),
                                    number(tr[k], "scale", path), number(tr[k], "growth", path)});
  }
  return p;
}

Json simulation_to_json(const SimConfig& cfg) {
  return {{"n_paths", cfg.n_paths},
          {"dt", cfg.dt},
          {"seed", cfg.seed},
          {"antithetic", cfg.antithetic},
          {"inadmissible_penalty", cfg.inadmissible_penalty ? Json(*cfg.inadmissible_penalty) : Json()},
          {"record_paths", cfg.record_paths},
          {"record_stride", cfg.record_stride},
          {"threads", cfg.threads}};
}

Json grid_to_json(const GridSpec& grid, CouplingMode coupling) {
  return {{"n_t", grid.n_t},     {"n_x", grid.n_x},     {"n_h", grid.n_h},
          {"h_max", grid.h_max}, {"w_min", grid.w_min}, {"w_max", grid.w_max},
          {"coupling", to_string(coupling)}};
}

Json load_config_document(const std::string& source) {
  if (source == kPaperDefaultsToken) return Json{{"model", std::string(kPaperDefaultsToken)}};
  std::ifstream in(source);
  if (!in) config_error("cannot open config file '" + source + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    config_error("'" + source + "' is not valid JSON: " + e.what());
  }
}

void apply_override(Json& document, const std::string& key, const Json& value) {
  auto parts = split_key(key);
  if (parts.front() != "simulation" && parts.front() != "verification" && parts.front() != "model")
    parts.insert(parts.begin(), "model");
  Json* node = &document;
  std::string walked;
  for (const auto& part : parts) {
    walked = join(walked, part);
    if (node->is_object()) {
      const auto it = node->find(part);
      if (it == node->end()) config_error("unknown key '" + key + "' (no '" + walked + "')");
      node = &*it;
    } else if (node->is_array()) {
      if (part.find_first_not_of("0123456789") != std::string::npos)
        config_error("'" + walked + "' must be an array index");
      const std::size_t idx = std::stoul(part);
      if (idx >= node->size()) config_error("index out of range in '" + key + "'");
      node = &(*node)[idx];
    } else {
      config_error("unknown key '" + key + "' ('" + walked + "' is not a container)");
    }
  }
  if (!compatible(*node, value)) config_error("override '" + key + "' has the wrong type");
  *node = value;
}

void apply_override(Json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error("override must look like key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;  // bare words are strings
  }
  apply_override(document, key, value);
}

ScenarioConfig resolve_config(Json document, const std::vector<std::string>& extra) {
  if (!document.is_object()) config_error("config must be a JSON object");
  for (auto it = document.begin(); it != document.end(); ++it)
    if (it.key() != "model" && it.key() != "overrides" && it.key() != "simulation" && it.key() != "verification")
      config_error("unknown top-level key '" + it.key() + "'");
  if (!document.contains("model")) config_error("missing key 'model'");
  if (document["model"].is_string()) {
    if (document["model"].get<std::string>() != kPaperDefaultsToken)
      config_error("model must be an object or \"paper_defaults\"");
    document["model"] = params_to_json(paper_defaults());
  }
  document["simulation"] = merge_block(simulation_to_json(cli_simulation_defaults()),
                                       document.value("simulation", Json::object()), "simulation");
  document["verification"] = merge_block(grid_to_json(GridSpec{}, CouplingMode::Exact),
                                         document.value("verification", Json::object()), "verification");
  if (document.contains("overrides")) {
    const Json overrides = document["overrides"];
    document.erase("overrides");
    if (!overrides.is_object()) config_error("'overrides' must map dotted keys to values");
    for (auto it = overrides.begin(); it != overrides.end(); ++it) apply_override(document, it.key(), it.value());
  }
  for (const auto& a : extra) apply_override(document, a);

  ScenarioConfig cfg;
  cfg.model = params_from_json(document["model"]);
  cfg.model.validate();
  cfg.simulation = simulation_from_json(document["simulation"]);
  grid_from_json(document["verification"], cfg.grid, cfg.coupling);
  cfg.document = std::move(document);
  return cfg;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << value;
  return out.str();
}

}  // namespace healthshock
