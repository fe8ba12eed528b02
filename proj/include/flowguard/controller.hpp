#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace flowguard {

/// H runs the detector with flow-lowered thresholds; T runs the detector alone.
enum class ModelChoice { Hybrid, Odn };

std::string_view to_string(ModelChoice c);

enum class TieBreak { PreferHybrid, PreferOdn };

/// Which score the selector maximizes.
///  ServiceOnly:  V*P(a) + Q*b(a)
///  ArrivalAware: V*P(a) + Q*(b(a) - w_fps*p(a)), for arrivals that depend on the
///                chosen model's cycle time. Reduces to ServiceOnly when p(a) is zero.
enum class DppRule { ServiceOnly, ArrivalAware };

std::string_view to_string(DppRule r);

struct ControllerConfig {
  double V = 90.0;
  double w1 = 3.64;    // service weight of H
  double w2 = 2.41;    // service weight of T
  double w_fps = 30.0;
  double w_p = 1.005;  // accuracy ratio of H over T
  TieBreak tie_break = TieBreak::PreferHybrid;
  DppRule rule = DppRule::ServiceOnly;

  /// Throws ValidationError unless V >= 0 and all weights are positive.
  void validate() const;

  friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

/// Per-frame estimates for both candidate models.
struct StepObservation {
  std::size_t num_hybrid = 0;
  std::size_t num_odn = 0;
  double latency_hybrid = 0.0;  // seconds per cycle
  double latency_odn = 0.0;

  double latency(ModelChoice c) const { return c == ModelChoice::Hybrid ? latency_hybrid : latency_odn; }
};

namespace controller {

/// max(Q + a - b, 0). Throws ValidationError on negative inputs.
double queue_update(double q, double a, double b);

/// Frames arriving during one processing cycle: w_fps * p.
double arrival(double w_fps, double p);

double service(ModelChoice alpha, const ControllerConfig& cfg);

double performance(ModelChoice alpha, std::size_t num_hybrid, std::size_t num_odn,
                   const ControllerConfig& cfg);

/// Drift-plus-penalty score under cfg.rule.
double dpp_score(ModelChoice alpha, double q, const StepObservation& obs, const ControllerConfig& cfg);

/// argmax of dpp_score over {H, T}; exact ties resolved by cfg.tie_break.
ModelChoice dpp_select(double q, const StepObservation& obs, const ControllerConfig& cfg);

/// Backlog at which the two affine scores cross, if they do so at some Q >= 0.
std::optional<double> dpp_crossover(const StepObservation& obs, const ControllerConfig& cfg);

/// L(Q) = Q^2 / 2.
double lyapunov(double q);

struct DriftSample {
  double q = 0.0;
  double a = 0.0;
  double b = 0.0;
};

struct DriftReport {
  std::size_t steps = 0;
  double min_slack = 0.0;
  double max_slack = 0.0;
  std::vector<std::size_t> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks L(Q') - L(Q) <= (a^2 + b^2)/2 + Q (a - b) with Q' = queue_update(Q, a, b)
/// at every step. Slack is bound minus drift; a step is a violation when the slack
/// is below -1e-9 * (1 + bound magnitude) to absorb rounding.
DriftReport drift_bound_check(std::span<const DriftSample> trajectory);

/// FLOPs for one selection over n_actions with each multiply, add/subtract and
/// compare counted once, given P and b already evaluated:
///  ServiceOnly:  3 per action (2 mul, 1 add) + (n-1) compares  -> 7 for two actions
///  ArrivalAware: 5 per action (arrival mul, sub, 2 mul, add) + (n-1) compares -> 11
std::size_t dpp_flops(DppRule rule = DppRule::ServiceOnly, std::size_t n_actions = 2);

/// FLOP count reported for the selector in the original evaluation.
inline constexpr std::size_t kReportedDppFlops = 12;

}  // namespace controller

/// Mutable queue owned by one driver loop.
class ControllerState {
 public:
  explicit ControllerState(ControllerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  double queue() const { return q_; }
  std::size_t t() const { return t_; }
  const ControllerConfig& config() const { return cfg_; }

  ModelChoice decide(const StepObservation& obs) const { return controller::dpp_select(q_, obs, cfg_); }

  /// Applies one step of the queue law and returns the new backlog.
  double advance(double a, double b);

 private:
  ControllerConfig cfg_;
  double q_ = 0.0;
  std::size_t t_ = 0;
};

}  // namespace flowguard
