#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "flowguard/controller.hpp"
#include "flowguard/detection.hpp"
#include "flowguard/flowmap.hpp"
#include "flowguard/policies.hpp"

namespace flowguard {

enum class Regime { Driving, Stationary };

std::string_view to_string(Regime r);
std::optional<Regime> parse_regime(std::string_view s);

/// Cycle time p = base + per_object * detected objects, in seconds.
struct LatencyModel {
  double base_hybrid = 0.133;
  double base_odn = 0.067;
  double per_object_hybrid = 0.001;
  double per_object_odn = 0.001;

  static LatencyModel cpu() { return {0.133, 0.067, 0.001, 0.001}; }
  static LatencyModel gpu() { return {0.083, 0.055, 0.001, 0.001}; }

  double latency(ModelChoice c, std::size_t num_objects) const;

  friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

enum class EstimateSource { CurrentFrame, PreviousFrame };

struct ScenarioConfig {
  std::size_t horizon = 3000;
  std::uint64_t seed = 1;

  // Two-regime Markov chain.
  Regime initial_regime = Regime::Driving;
  double p_drive_to_stop = 0.02;
  double p_stop_to_drive = 0.02;

  // Poisson object counts per frame.
  double mean_objects_driving = 1.0;
  double mean_objects_stationary = 0.5;
  std::size_t max_objects = 8;
  double min_box_size = 0.12;
  double max_box_size = 0.30;

  // Synthetic flow map, pixels/frame.
  std::size_t flow_rows = 64;
  std::size_t flow_cols = 64;
  double background_flow_driving = 2.0;
  double background_flow_stationary = 0.0;
  double object_motion_min = 2.0;
  double object_motion_max = 6.0;
  double flow_noise = 0.1;

  // Detector emulation over a grid_rows x grid_cols x boxes_per_cell grid.
  std::size_t grid_rows = 13;
  std::size_t grid_cols = 13;
  std::size_t boxes_per_cell = 3;
  double detect_prob = 0.75;       // object confidence lands above c_th
  double hybrid_gain = 0.6;        // missed moving object lands in the near-miss band
  double static_near_miss = 0.2;   // same, for objects that do not move
  double near_miss_low = 0.07;
  double near_miss_high = 0.45;
  double background_confidence_max = 0.05;
  double false_positive_rate = 0.05;  // per frame
  double false_positive_low = 0.3;
  double false_positive_high = 0.8;

  double c_th = 0.5;
  double nms_threshold = 0.2;
  double match_iou = 0.5;

  LatencyModel latency = LatencyModel::cpu();
  double overflow_cap = 500.0;
  // Arrivals follow the chosen model's cycle time; when false they follow the ODN's.
  bool arrival_coupled = true;
  EstimateSource estimates = EstimateSource::CurrentFrame;
  // Optional replay trace (CSV: t,regime,num_objects,flow_file,conf_file).
  std::string trace;

  /// Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct FrameObservation {
  Regime regime = Regime::Driving;
  std::vector<Box> truth;
  std::vector<double> motion;  // per truth box, flow above background
  FlowMap flow;
  ConfidenceGrid grid;
};

Regime next_regime(Regime current, const ScenarioConfig& cfg, Rng& rng);

/// Draws one frame for the given regime.
FrameObservation generate_frame(const ScenarioConfig& cfg, Regime regime, Rng& rng);

/// Source of frames for a run: the seeded generator or a replayed trace.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual FrameObservation next() = 0;
  /// Frames available, or SIZE_MAX when unbounded.
  virtual std::size_t available() const = 0;
};

class GeneratedFrames final : public FrameSource {
 public:
  GeneratedFrames(ScenarioConfig cfg, std::uint64_t seed);
  FrameObservation next() override;
  std::size_t available() const override;

 private:
  ScenarioConfig cfg_;
  Rng rng_;
  Regime regime_;
  std::size_t t_ = 0;
};

/// Confidence files: CSV header `kind,i,j,k,confidence,cx,cy,w,h`; kind is `box`
/// for a grid entry or `truth` for a ground-truth box (i, j, k, confidence ignored).
/// Flow files are .flo or text matrices. Relative paths resolve against the trace's directory.
class TraceFrames final : public FrameSource {
 public:
  TraceFrames(const std::filesystem::path& trace, const ScenarioConfig& cfg);
  FrameObservation next() override;
  std::size_t available() const override { return rows_.size() - cursor_; }

 private:
  struct Row {
    std::size_t t;
    Regime regime;
    std::size_t num_objects;
    std::filesystem::path flow_file;
    std::filesystem::path conf_file;
  };
  ScenarioConfig cfg_;
  std::vector<Row> rows_;
  std::size_t cursor_ = 0;
};

ConfidenceGrid read_confidence_file(const std::filesystem::path& path, std::size_t rows,
                                    std::size_t cols, std::size_t k, std::vector<Box>* truth);

struct ModelOutcome {
  std::vector<Detection> pre_nms;
  std::vector<Detection> detections;
  double latency = 0.0;
  DetectionMetrics metrics;

  std::size_t num_objects() const { return detections.size(); }
};

/// Runs one emulated model on a frame. Pass precomputed Hybrid thresholds to
/// avoid recomputing the flow pipeline; otherwise they are derived from frame.flow.
ModelOutcome emulate_detector(const FrameObservation& frame, ModelChoice alpha,
                              const ScenarioConfig& cfg, const ThresholdVector* hybrid_thresholds = nullptr);

struct StepRecord {
  std::size_t t = 0;
  Regime regime = Regime::Driving;
  ModelChoice alpha = ModelChoice::Odn;
  double q = 0.0;            // backlog before this step's update
  double a = 0.0;
  double b = 0.0;
  double performance = 0.0;
  double latency = 0.0;
  std::size_t num_hybrid = 0;
  std::size_t num_odn = 0;
  DetectionMetrics metrics;
  std::size_t flops = 0;
  std::size_t cumulative_flops = 0;
  double reward = 0.0;       // V * P + Q * b

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Summary {
  std::size_t steps = 0;
  double avg_q = 0.0;
  double max_q = 0.0;
  double final_q = 0.0;
  double avg_accuracy = 0.0;
  double mean_drift = 0.0;  // mean of a - b
  bool overflow = false;
  std::size_t hybrid_count = 0;
  std::size_t odn_count = 0;
  std::size_t total_flops = 0;

  friend bool operator==(const Summary&, const Summary&) = default;
};

struct SimResult {
  PolicyKind policy = PolicyKind::Dpp;
  std::vector<StepRecord> steps;
  double final_q = 0.0;  // backlog after the last step
  Summary summary;

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

/// Time averages over the records. Throws ValidationError for an empty result.
Summary summarize(const SimResult& result, double overflow_cap);

/// (Q, a, b) triples for drift_bound_check.
std::vector<controller::DriftSample> drift_trajectory(const SimResult& result);

/// Folds queue_update over the recorded (a, b); true when it reproduces every Q exactly.
bool replay_matches(const SimResult& result);

/// Mutable run state advanced by step().
struct SimState {
  std::size_t t = 0;
  double q = 0.0;
  double prev_arrival = 0.0;
  double prev_service = 0.0;
  std::size_t cumulative_flops = 0;
  bool has_prev_obs = false;
  StepObservation prev_obs;
};

class Simulator {
 public:
  /// agent must outlive the simulator when policy is Reinforce.
  Simulator(ScenarioConfig scenario, ControllerConfig controller, PolicyKind policy,
            const ReinforceAgent* agent = nullptr);

  /// Frame -> decision -> emulate the chosen model -> queue update. Appends the
  /// network-input transition to *episode when given.
  StepRecord step(Episode* episode = nullptr);

  const SimState& state() const { return state_; }
  bool done() const;

  SimResult run(Episode* episode = nullptr);

 private:
  ScenarioConfig scenario_;
  ControllerConfig controller_;
  PolicyKind policy_;
  const ReinforceAgent* agent_;
  std::unique_ptr<FrameSource> frames_;
  Rng policy_rng_;
  SimState state_;
  std::size_t horizon_;
};

/// Convenience wrapper: full run of scenario.horizon steps.
SimResult run(const ScenarioConfig& scenario, const ControllerConfig& controller, PolicyKind policy,
              const ReinforceAgent* agent = nullptr);

struct TrainingConfig {
  std::size_t episodes = 50;
  std::size_t horizon = 200;
  std::uint64_t seed = 2024;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

/// REINFORCE training on episodes drawn from the scenario with per-episode seeds.
ReinforceAgent train_reinforce(const ScenarioConfig& scenario, const ControllerConfig& controller,
                               const TrainingConfig& training, const ReinforceConfig& reinforce = {});

/// Long-format time series: t,policy,alpha,Q,a,b,P,p,tpr,flops,regime,num_h,num_t,total,correct,false,overlapped,reward
void write_timeseries(std::ostream& out, const std::vector<SimResult>& results, char sep = ',');
std::vector<SimResult> read_timeseries(std::istream& in, double overflow_cap, char sep = ',');

void write_summary(std::ostream& out, const std::vector<SimResult>& results, char sep = ',');

/// Gnuplot blocks: first column t, then one column per result.
void write_queue_dat(std::ostream& out, const std::vector<SimResult>& results);
/// Running time-average accuracy per policy.
void write_accuracy_dat(std::ostream& out, const std::vector<SimResult>& results);

}  // namespace flowguard
