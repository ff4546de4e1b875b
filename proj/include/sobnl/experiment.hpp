#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace sobnl {

// Configuration problems carry the offending field in the message.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RecipeInfo {
  std::string name;
  std::string identity;  // the quantity/identity the recipe evaluates
  std::vector<std::string> required;
  std::vector<std::string> optional;
};

const std::vector<RecipeInfo>& list_recipes();

struct ExperimentConfig {
  std::string recipe;
  nlohmann::json raw;  // validated config with defaults filled in
};

// Parse + validate; throws ConfigError naming the bad field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Apply a "dotted.path=value" override onto a raw config; the value is
// parsed as JSON when possible, kept as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& keyval);

struct ExperimentResult {
  std::string recipe;
  nlohmann::json summary;  // deterministic: no timing, fixed field set
  std::string csv;
  std::vector<std::pair<std::string, std::string>> extra_files;  // name -> content
  double seconds = 0.0;  // measured wall clock; reported on stdout only
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes summary.json + table.csv (+ recipe extras) under dir.
void write_outputs(const ExperimentResult& res, const std::string& dir);

}  // namespace sobnl
