#include "flowguard/policies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flowguard/error.hpp"
#include "flowguard/io.hpp"

namespace flowguard {

namespace {

constexpr char kMlpMagic[6] = {'F', 'G', 'M', 'L', 'P', '1'};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Eigen::MatrixXd& weights(MlpParams& p, int layer) {
  return layer == 0 ? p.w1 : layer == 1 ? p.w2 : p.w3;
}
const Eigen::MatrixXd& weights(const MlpParams& p, int layer) {
  return layer == 0 ? p.w1 : layer == 1 ? p.w2 : p.w3;
}
Eigen::VectorXd& bias(MlpParams& p, int layer) { return layer == 0 ? p.b1 : layer == 1 ? p.b2 : p.b3; }
const Eigen::VectorXd& bias(const MlpParams& p, int layer) {
  return layer == 0 ? p.b1 : layer == 1 ? p.b2 : p.b3;
}

Eigen::VectorXd relu(const Eigen::VectorXd& z) { return z.cwiseMax(0.0); }

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

double log_softmax_at(const Eigen::VectorXd& logits, Eigen::Index a) {
  const double m = logits.maxCoeff();
  return logits(a) - m - std::log((logits.array() - m).exp().sum());
}

Eigen::Index action_index(ModelChoice c) { return c == ModelChoice::Hybrid ? 0 : 1; }

}  // namespace

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Dpp: return "dpp";
    case PolicyKind::AlwaysOdn: return "always_t";
    case PolicyKind::AlwaysHybrid: return "always_h";
    case PolicyKind::Reinforce: return "reinforce";
  }
  return "unknown";
}

std::string_view display_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::Dpp: return "DPP";
    case PolicyKind::AlwaysOdn: return "Comp1";
    case PolicyKind::AlwaysHybrid: return "Comp2";
    case PolicyKind::Reinforce: return "Comp3";
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view s) {
  const std::string v = lower(s);
  for (PolicyKind k : kAllPolicies) {
    if (v == to_string(k) || v == lower(display_name(k))) return k;
  }
  return std::nullopt;
}

PolicyState10 make_policy_state(double q, double prev_arrival, double prev_service,
                                double cur_service, double cur_performance,
                                const ControllerConfig& cfg) {
  return {q, prev_arrival, prev_service, cur_service, cur_performance,
          cfg.w1, cfg.w2, cfg.w_fps, cfg.w_p, cfg.V};
}

PolicyState10 normalize_state(const PolicyState10& s) {
  static constexpr PolicyState10 kScale = {100.0, 10.0, 10.0, 10.0, 100.0,
                                           10.0, 10.0, 100.0, 1.0, 100.0};
  PolicyState10 out{};
  for (std::size_t n = 0; n < s.size(); ++n) out[n] = s[n] / kScale[n];
  return out;
}

MlpParams MlpParams::zeros(const MlpDims& d) {
  MlpParams p;
  p.w1 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.hidden1), static_cast<Eigen::Index>(d.input));
  p.b1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.hidden1));
  p.w2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.hidden2), static_cast<Eigen::Index>(d.hidden1));
  p.b2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.hidden2));
  p.w3 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.output), static_cast<Eigen::Index>(d.hidden2));
  p.b3 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.output));
  return p;
}

MlpParams MlpParams::init_uniform(const MlpDims& d, Rng& rng) {
  MlpParams p = zeros(d);
  for (int layer = 0; layer < 3; ++layer) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(weights(p, layer).cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t n = 0; n < p.layer_size(layer); ++n) p.at(layer, n) = dist(rng);
  }
  return p;
}

MlpDims MlpParams::dims() const {
  return {static_cast<std::size_t>(w1.cols()), static_cast<std::size_t>(w1.rows()),
          static_cast<std::size_t>(w2.rows()), static_cast<std::size_t>(w3.rows())};
}

std::size_t MlpParams::parameter_count() const {
  return layer_size(0) + layer_size(1) + layer_size(2);
}

std::size_t MlpParams::layer_size(int layer) const {
  return static_cast<std::size_t>(weights(*this, layer).size() + bias(*this, layer).size());
}

double& MlpParams::at(int layer, std::size_t idx) {
  auto& w = weights(*this, layer);
  const auto n = static_cast<Eigen::Index>(idx);
  if (n < w.size()) return w(n / w.cols(), n % w.cols());
  return bias(*this, layer)(n - w.size());
}

double MlpParams::at(int layer, std::size_t idx) const {
  return const_cast<MlpParams&>(*this).at(layer, idx);
}

void MlpParams::validate() const {
  if (w1.rows() != b1.size() || w2.cols() != w1.rows() || w2.rows() != b2.size() ||
      w3.cols() != w2.rows() || w3.rows() != b3.size() || w1.size() == 0 || w3.rows() == 0) {
    throw DimensionError("inconsistent MLP layer shapes");
  }
  for (int layer = 0; layer < 3; ++layer) {
    if (!weights(*this, layer).allFinite() || !bias(*this, layer).allFinite()) {
      throw ValidationError("MLP parameters must be finite");
    }
  }
}

bool MlpParams::operator==(const MlpParams& o) const {
  if (dims() != o.dims()) return false;
  return w1 == o.w1 && w2 == o.w2 && w3 == o.w3 && b1 == o.b1 && b2 == o.b2 && b3 == o.b3;
}

ForwardCache mlp_forward(const MlpParams& params, std::span<const double> state) {
  if (static_cast<Eigen::Index>(state.size()) != params.w1.cols()) {
    throw DimensionError("state length " + std::to_string(state.size()) + " does not match MLP input " +
                         std::to_string(params.w1.cols()));
  }
  ForwardCache c;
  c.input = Eigen::Map<const Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(state.size()));
  c.z1 = params.w1 * c.input + params.b1;
  c.h1 = relu(c.z1);
  c.z2 = params.w2 * c.h1 + params.b2;
  c.h2 = relu(c.z2);
  c.logits = params.w3 * c.h2 + params.b3;
  c.probs = softmax(c.logits);
  return c;
}

std::vector<double> discounted_returns(const Episode& episode, double gamma, bool normalize_by_length) {
  std::vector<double> g(episode.size());
  double running = 0.0;
  for (std::size_t n = episode.size(); n-- > 0;) {
    running = episode[n].reward + gamma * running;
    g[n] = running;
  }
  if (normalize_by_length && !episode.empty()) {
    const double len = static_cast<double>(episode.size());
    for (double& v : g) v /= len;
  }
  return g;
}

double policy_objective(const MlpParams& params, const Episode& episode, const ReinforceConfig& cfg) {
  const auto g = discounted_returns(episode, cfg.gamma, cfg.normalize_by_length);
  double j = 0.0;
  for (std::size_t n = 0; n < episode.size(); ++n) {
    const auto c = mlp_forward(params, episode[n].state);
    j += log_softmax_at(c.logits, action_index(episode[n].action)) * g[n];
  }
  return j;
}

MlpParams policy_gradient(const MlpParams& params, const Episode& episode, const ReinforceConfig& cfg) {
  MlpParams grad = MlpParams::zeros(params.dims());
  const auto g = discounted_returns(episode, cfg.gamma, cfg.normalize_by_length);
  for (std::size_t n = 0; n < episode.size(); ++n) {
    if (g[n] == 0.0) continue;
    const auto c = mlp_forward(params, episode[n].state);
    Eigen::VectorXd d3 = -c.probs;
    d3(action_index(episode[n].action)) += 1.0;
    d3 *= g[n];
    grad.w3.noalias() += d3 * c.h2.transpose();
    grad.b3 += d3;
    Eigen::VectorXd d2 = (params.w3.transpose() * d3).cwiseProduct(
        (c.z2.array() > 0.0).cast<double>().matrix());
    grad.w2.noalias() += d2 * c.h1.transpose();
    grad.b2 += d2;
    Eigen::VectorXd d1 = (params.w2.transpose() * d2).cwiseProduct(
        (c.z1.array() > 0.0).cast<double>().matrix());
    grad.w1.noalias() += d1 * c.input.transpose();
    grad.b1 += d1;
  }
  return grad;
}

AdamOptimizer::AdamOptimizer(const MlpDims& dims, const ReinforceConfig& cfg)
    : cfg_(cfg), m_(MlpParams::zeros(dims)), v_(MlpParams::zeros(dims)) {}

void AdamOptimizer::step(MlpParams& params, const MlpParams& gradient) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (int layer = 0; layer < 3; ++layer) {
    for (std::size_t n = 0; n < params.layer_size(layer); ++n) {
      const double g = gradient.at(layer, n);
      double& m = m_.at(layer, n);
      double& v = v_.at(layer, n);
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      params.at(layer, n) += cfg_.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg_.epsilon);
    }
  }
}

MlpParams reinforce_update(const MlpParams& params, const Episode& episode, double lr, double gamma) {
  if (episode.empty()) throw ValidationError("REINFORCE update needs a non-empty episode");
  ReinforceConfig cfg;
  cfg.learning_rate = lr;
  cfg.gamma = gamma;
  MlpParams out = params;
  AdamOptimizer adam(params.dims(), cfg);
  adam.step(out, policy_gradient(params, episode, cfg));
  return out;
}

ReinforceAgent::ReinforceAgent(MlpParams params, ReinforceConfig cfg)
    : params_(std::move(params)), cfg_(cfg), adam_(params_.dims(), cfg) {
  params_.validate();
}

double ReinforceAgent::prob_hybrid(const PolicyState10& raw_state) const {
  const auto s = normalize_state(raw_state);
  return mlp_forward(params_, s).probs(0);
}

ModelChoice ReinforceAgent::sample(const PolicyState10& raw_state, Rng& rng) const {
  return sample_choice(prob_hybrid(raw_state), rng);
}

void ReinforceAgent::update(const Episode& episode) {
  if (episode.empty()) throw ValidationError("REINFORCE update needs a non-empty episode");
  adam_.step(params_, policy_gradient(params_, episode, cfg_));
}

ModelChoice sample_choice(double p_hybrid, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < p_hybrid ? ModelChoice::Hybrid : ModelChoice::Odn;
}

ModelChoice policy_decide(PolicyKind kind, const PolicyState10& state, const StepObservation& obs,
                          const ControllerConfig& cfg, Rng& rng, const ReinforceAgent* agent) {
  switch (kind) {
    case PolicyKind::AlwaysOdn: return ModelChoice::Odn;
    case PolicyKind::AlwaysHybrid: return ModelChoice::Hybrid;
    case PolicyKind::Dpp: return controller::dpp_select(state[0], obs, cfg);
    case PolicyKind::Reinforce:
      if (agent == nullptr) throw ValidationError("REINFORCE policy needs a trained agent");
      return agent->sample(state, rng);
  }
  throw ValidationError("unknown policy kind");
}

FlopCount mlp_flops(const MlpDims& d, FlopConvention conv) {
  const std::array<std::pair<std::size_t, std::size_t>, 3> layers = {
      std::pair{d.input, d.hidden1}, std::pair{d.hidden1, d.hidden2}, std::pair{d.hidden2, d.output}};
  FlopCount f;
  for (const auto& [in, out] : layers) {
    f.linear += conv == FlopConvention::MacTwoWithActivations ? 2 * in * out : (2 * in - 1) * out;
  }
  if (conv == FlopConvention::MacTwoWithActivations) {
    // ReLU compare per hidden unit; softmax: one exp and one divide per output, out-1 adds.
    f.activation = d.hidden1 + d.hidden2 + 3 * d.output - 1;
  }
  return f;
}

FlopCount reinforce_flops(const MlpParams& params, FlopConvention conv) {
  return mlp_flops(params.dims(), conv);
}

std::size_t policy_flops(PolicyKind kind, DppRule rule, const MlpDims& dims) {
  switch (kind) {
    case PolicyKind::Dpp: return controller::dpp_flops(rule);
    case PolicyKind::Reinforce: return mlp_flops(dims).total();
    default: return 0;
  }
}

void save_mlp(std::ostream& out, const MlpParams& params) {
  params.validate();
  out.write(kMlpMagic, sizeof(kMlpMagic));
  const MlpDims d = params.dims();
  const std::array<std::size_t, 4> dims = {d.input, d.hidden1, d.hidden2, d.output};
  io::write_le(out, static_cast<std::uint32_t>(dims.size()));
  for (std::size_t v : dims) io::write_le(out, static_cast<std::uint32_t>(v));
  for (int layer = 0; layer < 3; ++layer) {
    for (std::size_t n = 0; n < params.layer_size(layer); ++n) io::write_le(out, params.at(layer, n));
  }
  if (!out) throw IoError("failed to write MLP parameters");
}

MlpParams load_mlp(std::istream& in) {
  char magic[sizeof(kMlpMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kMlpMagic)) {
    throw IoError("not an FGMLP1 parameter file");
  }
  const auto count = io::read_le<std::uint32_t>(in);
  if (count != 4) throw IoError("expected 4 layer dims, found " + std::to_string(count));
  std::array<std::size_t, 4> dims{};
  for (auto& v : dims) {
    v = io::read_le<std::uint32_t>(in);
    if (v == 0 || v > (1u << 16)) throw IoError("implausible layer dimension");
  }
  MlpParams p = MlpParams::zeros({dims[0], dims[1], dims[2], dims[3]});
  for (int layer = 0; layer < 3; ++layer) {
    for (std::size_t n = 0; n < p.layer_size(layer); ++n) p.at(layer, n) = io::read_le<double>(in);
  }
  p.validate();
  return p;
}

void save_mlp_file(const std::string& path, const MlpParams& params) {
  std::ostringstream buf(std::ios::binary);
  save_mlp(buf, params);
  io::write_file_atomic(path, buf.str());
}

MlpParams load_mlp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load_mlp(in);
}

}  // namespace flowguard
