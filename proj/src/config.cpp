#include "flowguard/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include <yaml-cpp/yaml.h>

namespace flowguard {

namespace {

struct Field {
  std::string section;  // empty for top-level keys
  std::string key;
  std::function<void(RunConfig&, const YAML::Node&)> set;
  std::function<void(const RunConfig&, YAML::Emitter&)> emit;
};

template <typename Section, typename T>
Field field(std::string section, std::string key, Section RunConfig::*sec, T Section::*member) {
  return Field{
      std::move(section), std::move(key),
      [sec, member](RunConfig& c, const YAML::Node& n) { (c.*sec).*member = n.as<T>(); },
      [sec, member](const RunConfig& c, YAML::Emitter& e) { e << (c.*sec).*member; }};
}

template <typename Section, typename Enum>
Field enum_field(std::string section, std::string key, Section RunConfig::*sec, Enum Section::*member,
                 std::vector<std::pair<std::string, Enum>> names) {
  return Field{
      std::move(section), key,
      [sec, member, names, key](RunConfig& c, const YAML::Node& n) {
        const auto s = n.as<std::string>();
        for (const auto& [name, v] : names) {
          if (name == s) {
            (c.*sec).*member = v;
            return;
          }
        }
        throw YAML::TypedBadConversion<Enum>(n.Mark());
      },
      [sec, member, names](const RunConfig& c, YAML::Emitter& e) {
        for (const auto& [name, v] : names) {
          if (v == (c.*sec).*member) e << name;
        }
      }};
}

template <typename T>
Field latency_field(std::string key, T LatencyModel::*member) {
  return Field{"scenario", std::move(key),
               [member](RunConfig& c, const YAML::Node& n) { c.scenario.latency.*member = n.as<T>(); },
               [member](const RunConfig& c, YAML::Emitter& e) { e << c.scenario.latency.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back({"", "seed", [](RunConfig& c, const YAML::Node& n) { c.seed = n.as<std::uint64_t>(); },
                 [](const RunConfig& c, YAML::Emitter& e) { e << c.seed; }});
    f.push_back({"", "output_dir",
                 [](RunConfig& c, const YAML::Node& n) { c.output_dir = n.as<std::string>(); },
                 [](const RunConfig& c, YAML::Emitter& e) { e << c.output_dir; }});
    f.push_back({"", "format",
                 [](RunConfig& c, const YAML::Node& n) {
                   const auto s = n.as<std::string>();
                   if (s == "csv") c.format = OutputFormat::Csv;
                   else if (s == "tsv") c.format = OutputFormat::Tsv;
                   else throw YAML::TypedBadConversion<OutputFormat>(n.Mark());
                 },
                 [](const RunConfig& c, YAML::Emitter& e) { e << (c.format == OutputFormat::Tsv ? "tsv" : "csv"); }});
    f.push_back({"", "policy",
                 [](RunConfig& c, const YAML::Node& n) {
                   const auto k = parse_policy_kind(n.as<std::string>());
                   if (!k) throw YAML::TypedBadConversion<PolicyKind>(n.Mark());
                   c.policy = *k;
                 },
                 [](const RunConfig& c, YAML::Emitter& e) { e << std::string(to_string(c.policy)); }});

    using C = ControllerConfig;
    f.push_back(field("controller", "V", &RunConfig::controller, &C::V));
    f.push_back(field("controller", "w1", &RunConfig::controller, &C::w1));
    f.push_back(field("controller", "w2", &RunConfig::controller, &C::w2));
    f.push_back(field("controller", "w_fps", &RunConfig::controller, &C::w_fps));
    f.push_back(field("controller", "w_p", &RunConfig::controller, &C::w_p));
    f.push_back(enum_field<C, TieBreak>("controller", "tie_break", &RunConfig::controller, &C::tie_break,
                                        {{"hybrid", TieBreak::PreferHybrid}, {"odn", TieBreak::PreferOdn}}));
    f.push_back(enum_field<C, DppRule>("controller", "rule", &RunConfig::controller, &C::rule,
                                       {{"service_only", DppRule::ServiceOnly}, {"arrival_aware", DppRule::ArrivalAware}}));

    using S = ScenarioConfig;
    f.push_back(field("detection", "c_th", &RunConfig::scenario, &S::c_th));
    f.push_back(field("detection", "nms_threshold", &RunConfig::scenario, &S::nms_threshold));
    f.push_back(field("detection", "match_iou", &RunConfig::scenario, &S::match_iou));

    f.push_back(field("scenario", "horizon", &RunConfig::scenario, &S::horizon));
    f.push_back(enum_field<S, Regime>("scenario", "initial_regime", &RunConfig::scenario, &S::initial_regime,
                                      {{"driving", Regime::Driving}, {"stationary", Regime::Stationary}}));
    f.push_back(field("scenario", "p_drive_to_stop", &RunConfig::scenario, &S::p_drive_to_stop));
    f.push_back(field("scenario", "p_stop_to_drive", &RunConfig::scenario, &S::p_stop_to_drive));
    f.push_back(field("scenario", "mean_objects_driving", &RunConfig::scenario, &S::mean_objects_driving));
    f.push_back(field("scenario", "mean_objects_stationary", &RunConfig::scenario, &S::mean_objects_stationary));
    f.push_back(field("scenario", "max_objects", &RunConfig::scenario, &S::max_objects));
    f.push_back(field("scenario", "min_box_size", &RunConfig::scenario, &S::min_box_size));
    f.push_back(field("scenario", "max_box_size", &RunConfig::scenario, &S::max_box_size));
    f.push_back(field("scenario", "flow_rows", &RunConfig::scenario, &S::flow_rows));
    f.push_back(field("scenario", "flow_cols", &RunConfig::scenario, &S::flow_cols));
    f.push_back(field("scenario", "background_flow_driving", &RunConfig::scenario, &S::background_flow_driving));
    f.push_back(field("scenario", "background_flow_stationary", &RunConfig::scenario, &S::background_flow_stationary));
    f.push_back(field("scenario", "object_motion_min", &RunConfig::scenario, &S::object_motion_min));
    f.push_back(field("scenario", "object_motion_max", &RunConfig::scenario, &S::object_motion_max));
    f.push_back(field("scenario", "flow_noise", &RunConfig::scenario, &S::flow_noise));
    f.push_back(field("scenario", "grid_rows", &RunConfig::scenario, &S::grid_rows));
    f.push_back(field("scenario", "grid_cols", &RunConfig::scenario, &S::grid_cols));
    f.push_back(field("scenario", "boxes_per_cell", &RunConfig::scenario, &S::boxes_per_cell));
    f.push_back(field("scenario", "detect_prob", &RunConfig::scenario, &S::detect_prob));
    f.push_back(field("scenario", "hybrid_gain", &RunConfig::scenario, &S::hybrid_gain));
    f.push_back(field("scenario", "static_near_miss", &RunConfig::scenario, &S::static_near_miss));
    f.push_back(field("scenario", "near_miss_low", &RunConfig::scenario, &S::near_miss_low));
    f.push_back(field("scenario", "near_miss_high", &RunConfig::scenario, &S::near_miss_high));
    f.push_back(field("scenario", "background_confidence_max", &RunConfig::scenario, &S::background_confidence_max));
    f.push_back(field("scenario", "false_positive_rate", &RunConfig::scenario, &S::false_positive_rate));
    f.push_back(field("scenario", "false_positive_low", &RunConfig::scenario, &S::false_positive_low));
    f.push_back(field("scenario", "false_positive_high", &RunConfig::scenario, &S::false_positive_high));
    f.push_back(latency_field("latency_hybrid", &LatencyModel::base_hybrid));
    f.push_back(latency_field("latency_odn", &LatencyModel::base_odn));
    f.push_back(latency_field("per_object_hybrid", &LatencyModel::per_object_hybrid));
    f.push_back(latency_field("per_object_odn", &LatencyModel::per_object_odn));
    f.push_back(field("scenario", "overflow_cap", &RunConfig::scenario, &S::overflow_cap));
    f.push_back(field("scenario", "arrival_coupled", &RunConfig::scenario, &S::arrival_coupled));
    f.push_back(enum_field<S, EstimateSource>(
        "scenario", "estimates", &RunConfig::scenario, &S::estimates,
        {{"current", EstimateSource::CurrentFrame}, {"previous", EstimateSource::PreviousFrame}}));
    f.push_back(field("scenario", "trace", &RunConfig::scenario, &S::trace));

    using R = ReinforceConfig;
    using T = TrainingConfig;
    f.push_back(field("reinforce", "learning_rate", &RunConfig::reinforce, &R::learning_rate));
    f.push_back(field("reinforce", "gamma", &RunConfig::reinforce, &R::gamma));
    f.push_back(field("reinforce", "beta1", &RunConfig::reinforce, &R::beta1));
    f.push_back(field("reinforce", "beta2", &RunConfig::reinforce, &R::beta2));
    f.push_back(field("reinforce", "epsilon", &RunConfig::reinforce, &R::epsilon));
    f.push_back(field("reinforce", "normalize_by_length", &RunConfig::reinforce, &R::normalize_by_length));
    f.push_back(field("reinforce", "train_episodes", &RunConfig::training, &T::episodes));
    f.push_back(field("reinforce", "train_horizon", &RunConfig::training, &T::horizon));
    f.push_back(field("reinforce", "train_seed", &RunConfig::training, &T::seed));
    f.push_back({"reinforce", "params_file",
                 [](RunConfig& c, const YAML::Node& n) { c.reinforce_params = n.as<std::string>(); },
                 [](const RunConfig& c, YAML::Emitter& e) { e << c.reinforce_params; }});
    return f;
  }();
  return all;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

bool is_section(const std::string& name) {
  for (const auto& f : fields()) {
    if (f.section == name) return true;
  }
  return false;
}

std::string where(const std::string& source, const YAML::Mark& m) {
  return source + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

std::string dotted(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

void apply(RunConfig& cfg, const Field& f, const YAML::Node& value, const std::string& source) {
  if (!value.IsScalar()) {
    throw ConfigError(where(source, value.Mark()) + ": '" + dotted(f.section, f.key) + "' expects a scalar",
                      dotted(f.section, f.key));
  }
  try {
    f.set(cfg, value);
  } catch (const YAML::Exception&) {
    throw ConfigError(where(source, value.Mark()) + ": invalid value '" + value.Scalar() + "' for '" +
                          dotted(f.section, f.key) + "'",
                      dotted(f.section, f.key));
  }
}

}  // namespace

ScenarioConfig RunConfig::effective_scenario() const {
  ScenarioConfig s = scenario;
  s.seed = seed;
  return s;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(source, e.mark) + ": " + e.msg, "");
  }
  RunConfig cfg;
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError(where(source, root.Mark()) + ": top level must be a mapping", "");

  // Profile presets apply first so explicit latency keys override them.
  if (const auto sc = root["scenario"]; sc && sc.IsMap()) {
    if (const auto profile = sc["profile"]) {
      const auto name = profile.IsScalar() ? profile.Scalar() : std::string();
      if (name == "cpu") cfg.scenario.latency = LatencyModel::cpu();
      else if (name == "gpu") cfg.scenario.latency = LatencyModel::gpu();
      else throw ConfigError(where(source, profile.Mark()) + ": scenario.profile must be cpu or gpu", "scenario.profile");
    }
  }

  for (const auto& entry : root) {
    const auto key = entry.first.as<std::string>();
    const YAML::Node& value = entry.second;
    if (const Field* f = find_field("", key)) {
      apply(cfg, *f, value, source);
      continue;
    }
    if (!is_section(key)) {
      throw ConfigError(where(source, entry.first.Mark()) + ": unknown key '" + key + "'", key);
    }
    if (!value.IsMap()) throw ConfigError(where(source, value.Mark()) + ": '" + key + "' must be a mapping", key);
    for (const auto& inner : value) {
      const auto sub = inner.first.as<std::string>();
      if (key == "scenario" && sub == "profile") continue;
      const Field* f = find_field(key, sub);
      if (!f) {
        throw ConfigError(where(source, inner.first.Mark()) + ": unknown key '" + key + "." + sub + "'",
                          key + "." + sub);
      }
      apply(cfg, *f, inner.second, source);
    }
  }

  try {
    cfg.controller.validate();
    cfg.scenario.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(source + ": " + e.what(), "");
  }
  if (!(cfg.reinforce.learning_rate > 0.0) || !(cfg.reinforce.gamma >= 0.0 && cfg.reinforce.gamma <= 1.0)) {
    throw ConfigError(source + ": reinforce.learning_rate must be > 0 and reinforce.gamma in [0, 1]",
                      "reinforce.learning_rate");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.string());
}

std::string serialize_run_config(const RunConfig& cfg) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  std::string open_section;
  for (const auto& f : fields()) {
    if (f.section != open_section) {
      if (!open_section.empty()) e << YAML::EndMap;
      open_section = f.section;
      e << YAML::Key << f.section << YAML::Value << YAML::BeginMap;
    }
    e << YAML::Key << f.key << YAML::Value;
    f.emit(cfg, e);
  }
  if (!open_section.empty()) e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace flowguard
