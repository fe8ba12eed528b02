// flowguard command-line entry point.
//
//   flowguard process-flow <input.flo|matrix.csv> --grid 13x13 --k 3 --cth 0.5 --out thresholds.csv
//   flowguard simulate --config run.yaml [--seed N] [--out DIR]
//   flowguard compare  --config run.yaml [--seed N] [--out DIR]
//
// Exit codes: 0 success, 2 usage or input error, 1 internal error.

#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowguard/config.hpp"
#include "flowguard/error.hpp"
#include "flowguard/flowmap.hpp"
#include "flowguard/io.hpp"
#include "flowguard/policies.hpp"
#include "flowguard/sim.hpp"

namespace fs = std::filesystem;
using namespace flowguard;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
  const auto sep = s.find_first_of("x,X");
  try {
    if (sep == std::string::npos) {
      const auto n = std::stoul(s);
      return {n, n};
    }
    return {std::stoul(s.substr(0, sep)), std::stoul(s.substr(sep + 1))};
  } catch (const std::logic_error&) {
    throw InputError("--grid expects ROWSxCOLS, got '" + s + "'");
  }
}

int cmd_process_flow(const std::string& input, const std::string& grid, std::size_t k, double c_th,
                     const std::string& out_path) {
  const FlowMap map = io::load_flow_map(input);
  std::size_t rows = map.rows(), cols = map.cols();
  if (!grid.empty()) std::tie(rows, cols) = parse_grid(grid);
  const ThresholdVector thr = flowmap::process(map, rows, cols, k, c_th);

  std::string body;
  for (double v : thr) body += io::format_double(v) + "\n";
  io::write_file_atomic(out_path, body);

  const auto [lo, hi] = std::minmax_element(thr.begin(), thr.end());
  const double mean = std::accumulate(thr.begin(), thr.end(), 0.0) / static_cast<double>(thr.size());
  std::cout << "thresholds=" << thr.size() << " grid=" << rows << "x" << cols << " k=" << k
            << " min=" << io::format_double(*lo) << " max=" << io::format_double(*hi)
            << " mean=" << io::format_double(mean) << "\n";
  return kExitOk;
}

RunConfig resolve_config(const std::string& path, std::optional<std::uint64_t> seed,
                         const std::string& out) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  if (seed) cfg.seed = *seed;
  if (!out.empty()) cfg.output_dir = out;
  return cfg;
}

ReinforceAgent comp3_agent(const RunConfig& cfg) {
  if (!cfg.reinforce_params.empty()) return ReinforceAgent(load_mlp_file(cfg.reinforce_params), cfg.reinforce);
  return train_reinforce(cfg.effective_scenario(), cfg.controller, cfg.training, cfg.reinforce);
}

std::string ext(const RunConfig& cfg) { return cfg.format == OutputFormat::Tsv ? ".tsv" : ".csv"; }

void write_tables(const RunConfig& cfg, const std::vector<SimResult>& results) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  std::ostringstream ts, summary;
  write_timeseries(ts, results, cfg.separator());
  write_summary(summary, results, cfg.separator());
  io::write_file_atomic(dir / ("timeseries" + ext(cfg)), ts.str());
  io::write_file_atomic(dir / ("summary" + ext(cfg)), summary.str());
}

void print_summary(const std::vector<SimResult>& results) {
  for (const auto& r : results) {
    const Summary& s = r.summary;
    std::cout << display_name(r.policy) << ": steps=" << s.steps << " avg_q=" << s.avg_q
              << " max_q=" << s.max_q << " avg_accuracy=" << s.avg_accuracy
              << " overflow=" << (s.overflow ? "true" : "false") << " H=" << s.hybrid_count
              << " T=" << s.odn_count << " flops/decision="
              << (r.steps.empty() ? 0 : r.steps.front().flops) << "\n";
  }
}

int cmd_simulate(const RunConfig& cfg) {
  std::optional<ReinforceAgent> agent;
  if (cfg.policy == PolicyKind::Reinforce) agent.emplace(comp3_agent(cfg));
  std::vector<SimResult> results{
      run(cfg.effective_scenario(), cfg.controller, cfg.policy, agent ? &*agent : nullptr)};
  write_tables(cfg, results);
  print_summary(results);
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg) {
  const ReinforceAgent agent = comp3_agent(cfg);
  const ScenarioConfig scenario = cfg.effective_scenario();

  // Runs share no mutable state; each owns its simulator and rng streams.
  std::vector<std::future<SimResult>> jobs;
  for (PolicyKind k : kAllPolicies) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      return run(scenario, cfg.controller, k, k == PolicyKind::Reinforce ? &agent : nullptr);
    }));
  }
  std::vector<SimResult> results;
  for (auto& j : jobs) results.push_back(j.get());

  write_tables(cfg, results);
  const fs::path dir(cfg.output_dir);
  std::ostringstream queue, accuracy;
  write_queue_dat(queue, results);
  write_accuracy_dat(accuracy, results);
  io::write_file_atomic(dir / "queue_backlog.dat", queue.str());
  io::write_file_atomic(dir / "average_accuracy.dat", accuracy.str());
  save_mlp_file((dir / "comp3_params.fgmlp").string(), agent.params());
  print_summary(results);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-map confidence thresholds and drift-plus-penalty model selection"};
  app.require_subcommand(1);

  std::string input, grid, out_path;
  std::size_t k = 1;
  double c_th = 0.5;
  auto* process = app.add_subcommand("process-flow", "Turn a flow map into per-cell confidence thresholds");
  process->add_option("input", input, ".flo file or text matrix")->required();
  process->add_option("--grid", grid, "Detector grid as ROWSxCOLS (default: flow map size)");
  process->add_option("--k", k, "Boxes per cell")->check(CLI::PositiveNumber)->capture_default_str();
  process->add_option("--cth", c_th, "Scalar confidence threshold")->capture_default_str();
  process->add_option("--out", out_path, "Output CSV path")->required();

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto* simulate = app.add_subcommand("simulate", "Run one policy and write its time series");
  auto* compare = app.add_subcommand("compare", "Run DPP and the three baselines on identical scenarios");
  for (auto* sub : {simulate, compare}) {
    sub->add_option("--config", config_path, "YAML run configuration");
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", out_dir, "Override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*process) return cmd_process_flow(input, grid, k, c_th, out_path);
    const RunConfig cfg = resolve_config(config_path, seed, out_dir);
    if (*simulate) return cmd_simulate(cfg);
    return cmd_compare(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const IoError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
