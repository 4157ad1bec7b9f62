#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "healthshock/model.hpp"
#include "healthshock/simulation.hpp"
#include "healthshock/verification.hpp"

namespace healthshock {

using Json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kPaperDefaultsToken = "paper_defaults";

/// A resolved scenario. The JSON document keeps the exact inputs so that
/// outputs can be stamped with a hash of them.
///
/// Layout:
///   { "model": {...} | "paper_defaults",
///     "overrides": { "dotted.key": value, ... },       (optional)
///     "simulation": { n_paths, dt, seed, antithetic, record_paths, record_stride, threads },
///     "verification": { n_t, n_x, n_h, h_max, w_min, w_max, coupling } }
struct ScenarioConfig {
  Json document;  // fully materialized, overrides applied, "overrides" removed
  ModelParams model;
  SimConfig simulation;
  GridSpec grid;
  CouplingMode coupling = CouplingMode::Exact;

  /// FNV-1a 64 of the canonical JSON of `document`, as 16 hex digits.
  std::string hash() const;
};

Json params_to_json(const ModelParams& p);
/// Throws ConfigError naming the missing or mistyped key.
ModelParams params_from_json(const Json& j);

Json simulation_to_json(const SimConfig& cfg);
Json grid_to_json(const GridSpec& grid, CouplingMode coupling);

/// Reads `source` as a path, or returns the defaults document for the
/// `paper_defaults` token.
Json load_config_document(const std::string& source);

/// Applies `key=value`. Keys are dotted paths into the document; array
/// elements are addressed by index (prefs.k_a.1). Paths that do not start with
/// simulation/verification are taken relative to "model". The key must exist.
void apply_override(Json& document, const std::string& assignment);
void apply_override(Json& document, const std::string& key, const Json& value);

/// Fills defaults, applies the document's own overrides then `extra`, and
/// validates the model. Throws ConfigError or InvalidParameter.
ScenarioConfig resolve_config(Json document, const std::vector<std::string>& extra = {});

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace healthshock
