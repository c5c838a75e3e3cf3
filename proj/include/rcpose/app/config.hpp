#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "rcpose/estimator.hpp"

namespace rcpose::app {

// Environment variable naming the config file used when --config is absent.
inline constexpr const char* kConfigEnvVar = "RCPOSE_CONFIG";

// Command-line overrides; unset fields keep the file/default value.
struct ConfigOverrides {
  std::optional<int> iterations;
  std::optional<LatticeSpec> lattice;
  std::optional<int> crop_resolution;
  std::optional<double> fd_step;
  std::optional<int> workers;
  std::optional<LossMode> mode;
  bool no_culling = false;
  bool init_only = false;
};

// Keys absent from `json` keep their value in `base`; unknown keys and
// wrongly typed values raise ConfigurationError.
RefinementConfig ConfigFromJson(const nlohmann::json& json, RefinementConfig base = {});
nlohmann::ordered_json ConfigToJson(const RefinementConfig& config);

// Parses "m,n".
LatticeSpec ParseLattice(const std::string& text);

// flags > config file (explicit path, else $RCPOSE_CONFIG) > defaults.
// The result is validated.
RefinementConfig ResolveConfig(const std::optional<std::filesystem::path>& config_path,
                               const ConfigOverrides& overrides);

}  // namespace rcpose::app
