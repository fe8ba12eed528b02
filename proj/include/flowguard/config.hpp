#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "flowguard/controller.hpp"
#include "flowguard/error.hpp"
#include "flowguard/policies.hpp"
#include "flowguard/sim.hpp"

namespace flowguard {

enum class OutputFormat { Csv, Tsv };

/// Everything a simulate/compare invocation needs. Defaults follow the
/// experiment settings: V=90, c_th=0.5, NMS 0.2, weights 3.64/2.41/30/1.005.
struct RunConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "out";
  OutputFormat format = OutputFormat::Csv;
  PolicyKind policy = PolicyKind::Dpp;
  ControllerConfig controller = [] {
    ControllerConfig c;
    c.rule = DppRule::ArrivalAware;
    return c;
  }();
  ScenarioConfig scenario;
  ReinforceConfig reinforce;
  TrainingConfig training;
  std::string reinforce_params;  // load Comp3 weights from here instead of training

  /// Scenario with the run seed applied.
  ScenarioConfig effective_scenario() const;
  char separator() const { return format == OutputFormat::Tsv ? '\t' : ','; }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Raised for unknown keys and bad values; what() carries source:line:column.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& message, std::string key)
      : ValidationError(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// YAML mapping with sections controller, detection, scenario, reinforce. Absent
/// keys keep their defaults. `scenario.profile: cpu|gpu` presets the latency bases;
/// explicit latency keys win over the preset.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Emits every field explicitly; parse(serialize(c)) == c.
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace flowguard
