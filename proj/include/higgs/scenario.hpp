#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "higgs/ks_family.hpp"

namespace higgs {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Stage { identities, he, wp, wp_curvature, direct_image, finsler, oracles };
std::string stage_name(Stage s);

struct ScenarioConfig {
  int N = 16;
  cplx tau{0.1, 1.1};
  double scale = 1.0;
  std::string family = "F-st";  // F-ab | F-st | F-di | F-syn | path to a family JSON file
  std::vector<double> point;    // base point, real and imaginary parts interleaved; empty = origin
  double he_tol = 1e-12;
  double green_rtol = 1e-10;
  double fd_step = 1e-3;
  std::vector<double> kappas{0.1, 1.0, 10.0};
  std::vector<int> dimage_degrees{0, 1};
  std::set<Stage> stages;
  std::uint64_t seed = 17;
  std::string out = "out";
  int threads = 1;

  static ScenarioConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

struct ContractResult {
  std::string name;
  bool hard = true;  // hard contracts decide the exit status; oracle agreements are reported
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
};

struct ScenarioResult {
  nlohmann::json report;
  std::vector<ContractResult> contracts;
  bool hard_passed() const;
};

class StageError : public std::runtime_error {
 public:
  StageError(Stage s, const std::string& what, std::string hint)
      : std::runtime_error(stage_name(s) + ": " + what), stage_(s), hint_(std::move(hint)) {}
  Stage stage() const { return stage_; }
  const std::string& hint() const { return hint_; }

 private:
  Stage stage_;
  std::string hint_;
};

FamilyChart make_family(const ScenarioConfig& cfg);

// Runs the requested stages in dependency order and writes the report into cfg.out.
// On a stage failure the partial report is flushed before StageError propagates.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace higgs
