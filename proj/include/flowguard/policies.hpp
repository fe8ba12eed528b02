#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "flowguard/controller.hpp"

namespace flowguard {

using Rng = std::mt19937_64;

/// DPP is the proposed selector; AlwaysOdn, AlwaysHybrid and Reinforce are the
/// Comp1, Comp2 and Comp3 baselines.
enum class PolicyKind { Dpp, AlwaysOdn, AlwaysHybrid, Reinforce };

inline constexpr std::array<PolicyKind, 4> kAllPolicies = {
    PolicyKind::Dpp, PolicyKind::AlwaysOdn, PolicyKind::AlwaysHybrid, PolicyKind::Reinforce};

/// Config spelling: dpp, always_t, always_h, reinforce.
std::string_view to_string(PolicyKind k);
/// Plot label: DPP, Comp1, Comp2, Comp3.
std::string_view display_name(PolicyKind k);
/// Accepts the config spelling or the plot label (case-insensitive).
std::optional<PolicyKind> parse_policy_kind(std::string_view s);

/// {Q[t], a[t-1], b(prev), b(cur), P(cur), w1, w2, w_fps, w_p, V} in that order.
using PolicyState10 = std::array<double, 10>;

PolicyState10 make_policy_state(double q, double prev_arrival, double prev_service,
                                double cur_service, double cur_performance,
                                const ControllerConfig& cfg);

/// Divides each slot by a fixed scale so network inputs stay O(1):
/// Q/100, a/10, b/10, b/10, P/100, w1/10, w2/10, w_fps/100, w_p, V/100.
PolicyState10 normalize_state(const PolicyState10& s);

struct MlpDims {
  std::size_t input = 10;
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 128;
  std::size_t output = 2;

  friend bool operator==(const MlpDims&, const MlpDims&) = default;
};

/// Three dense layers; weight matrices are (out x in). Output index 0 is H, 1 is T.
struct MlpParams {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  static MlpParams zeros(const MlpDims& dims = {});
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  static MlpParams init_uniform(const MlpDims& dims, Rng& rng);

  MlpDims dims() const;
  std::size_t parameter_count() const;

  /// Layer l in {0,1,2}: its weights followed by its bias, flattened row-major.
  std::size_t layer_size(int layer) const;
  double& at(int layer, std::size_t idx);
  double at(int layer, std::size_t idx) const;

  /// Throws DimensionError if shapes are inconsistent, ValidationError on non-finite values.
  void validate() const;

  bool operator==(const MlpParams& o) const;
};

struct ForwardCache {
  Eigen::VectorXd input, z1, h1, z2, h2, logits, probs;
};

/// relu(W1 s + b1) -> relu(W2 h1 + b2) -> softmax(W3 h2 + b3).
ForwardCache mlp_forward(const MlpParams& params, std::span<const double> state);

struct Transition {
  PolicyState10 state{};
  ModelChoice action = ModelChoice::Hybrid;
  double reward = 0.0;
};
using Episode = std::vector<Transition>;

struct ReinforceConfig {
  double learning_rate = 2e-4;
  double gamma = 0.99;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool normalize_by_length = true;

  friend bool operator==(const ReinforceConfig&, const ReinforceConfig&) = default;
};

/// G_t = sum_{u>=t} gamma^(u-t) r_u, divided by the episode length when requested.
std::vector<double> discounted_returns(const Episode& episode, double gamma, bool normalize_by_length);

/// Gradient of J = sum_t log pi(a_t | s_t) * G_t by backpropagation.
MlpParams policy_gradient(const MlpParams& params, const Episode& episode, const ReinforceConfig& cfg);

/// The objective whose gradient policy_gradient returns. Exposed for gradient checks.
double policy_objective(const MlpParams& params, const Episode& episode, const ReinforceConfig& cfg);

/// Adam ascent on J.
class AdamOptimizer {
 public:
  AdamOptimizer(const MlpDims& dims, const ReinforceConfig& cfg);
  void step(MlpParams& params, const MlpParams& gradient);
  std::size_t steps() const { return t_; }

 private:
  ReinforceConfig cfg_;
  MlpParams m_, v_;
  std::size_t t_ = 0;
};

/// One REINFORCE step from fresh optimizer moments. Throws ValidationError on an empty episode.
MlpParams reinforce_update(const MlpParams& params, const Episode& episode, double lr, double gamma);

/// Policy network plus its optimizer state.
class ReinforceAgent {
 public:
  ReinforceAgent(MlpParams params, ReinforceConfig cfg = {});

  const MlpParams& params() const { return params_; }
  const ReinforceConfig& config() const { return cfg_; }

  /// Probability of choosing H for a raw (unnormalized) state.
  double prob_hybrid(const PolicyState10& raw_state) const;
  ModelChoice sample(const PolicyState10& raw_state, Rng& rng) const;

  /// Episode states must already be normalized (see normalize_state).
  void update(const Episode& episode);

 private:
  MlpParams params_;
  ReinforceConfig cfg_;
  AdamOptimizer adam_;
};

/// Samples H with probability p_hybrid using a single uniform draw.
ModelChoice sample_choice(double p_hybrid, Rng& rng);

/// Decision for any policy kind. Q is taken from state[0]. Reinforce requires an agent.
ModelChoice policy_decide(PolicyKind kind, const PolicyState10& state, const StepObservation& obs,
                          const ControllerConfig& cfg, Rng& rng,
                          const ReinforceAgent* agent = nullptr);

enum class FlopConvention {
  // Every multiply-add is 2 FLOPs; ReLU and softmax element operations are counted.
  MacTwoWithActivations,
  // in multiplies and in-1 adds per output, bias and activations not counted.
  MulAddNoBias,
};

struct FlopCount {
  std::size_t linear = 0;
  std::size_t activation = 0;
  std::size_t total() const { return linear + activation; }
};

FlopCount mlp_flops(const MlpDims& dims, FlopConvention conv = FlopConvention::MacTwoWithActivations);
FlopCount reinforce_flops(const MlpParams& params,
                          FlopConvention conv = FlopConvention::MacTwoWithActivations);

/// FLOP count reported for the REINFORCE selector in the original evaluation.
inline constexpr std::size_t kReportedReinforceFlops = 35582;

/// Per-decision FLOPs charged to a policy in simulation time series.
std::size_t policy_flops(PolicyKind kind, DppRule rule, const MlpDims& dims = {});

/// Binary layout: "FGMLP1", uint32 layer-dim count, the dims, then W1 b1 W2 b2 W3 b3
/// as little-endian float64, each weight matrix row-major (out x in).
void save_mlp(std::ostream& out, const MlpParams& params);
MlpParams load_mlp(std::istream& in);
void save_mlp_file(const std::string& path, const MlpParams& params);
MlpParams load_mlp_file(const std::string& path);

}  // namespace flowguard
