#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "flowguard/error.hpp"
#include "flowguard/policies.hpp"
#include "flowguard/sim.hpp"

using namespace flowguard;

namespace {

PolicyState10 random_state(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  PolicyState10 s;
  for (double& v : s) v = n(rng);
  return s;
}

// Straight-line forward pass with explicit loops, independent of Eigen expressions.
std::array<double, 2> forward_loops(const MlpParams& p, const PolicyState10& s) {
  const auto dense = [](const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const std::vector<double>& x,
                        bool relu) {
    std::vector<double> y(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * x[static_cast<std::size_t>(c)];
      acc += b(r);
      y[static_cast<std::size_t>(r)] = relu ? std::max(acc, 0.0) : acc;
    }
    return y;
  };
  const std::vector<double> x(s.begin(), s.end());
  const auto h1 = dense(p.w1, p.b1, x, true);
  const auto h2 = dense(p.w2, p.b2, h1, true);
  const auto z = dense(p.w3, p.b3, h2, false);
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

Episode random_episode(Rng& rng, std::size_t len) {
  std::uniform_real_distribution<double> r(-2.0, 2.0);
  Episode ep;
  for (std::size_t n = 0; n < len; ++n) {
    Transition t;
    t.state = random_state(rng);
    t.action = n % 3 == 0 ? ModelChoice::Odn : ModelChoice::Hybrid;
    t.reward = r(rng);
    ep.push_back(t);
  }
  return ep;
}

ScenarioConfig stationary_scenario() {
  ScenarioConfig sc;
  sc.initial_regime = Regime::Stationary;
  sc.p_stop_to_drive = 0.0;
  sc.flow_rows = 32;
  sc.flow_cols = 32;
  return sc;
}

double mean_reward(const ScenarioConfig& base, const ControllerConfig& ctl, const ReinforceAgent& agent,
                   std::size_t episodes, std::size_t horizon) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    ScenarioConfig sc = base;
    sc.horizon = horizon;
    sc.seed = 900000 + e;
    const auto res = run(sc, ctl, PolicyKind::Reinforce, &agent);
    for (const auto& r : res.steps) total += r.reward;
    count += res.steps.size();
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("policy names") {
  CHECK(to_string(PolicyKind::AlwaysOdn) == "always_t");
  CHECK(display_name(PolicyKind::AlwaysHybrid) == "Comp2");
  CHECK(parse_policy_kind("comp3") == PolicyKind::Reinforce);
  CHECK(parse_policy_kind("dpp") == PolicyKind::Dpp);
  CHECK_FALSE(parse_policy_kind("greedy").has_value());
}

TEST_CASE("policy_decide examples") {
  const ControllerConfig cfg;
  Rng rng(1);
  const StepObservation o{3, 2, 0.133, 0.067};
  const auto s = make_policy_state(0, 0, 0, 3.64, 3.015, cfg);
  CHECK(policy_decide(PolicyKind::AlwaysOdn, s, o, cfg, rng) == ModelChoice::Odn);
  CHECK(policy_decide(PolicyKind::AlwaysHybrid, s, o, cfg, rng) == ModelChoice::Hybrid);
  CHECK(policy_decide(PolicyKind::Dpp, s, o, cfg, rng) == ModelChoice::Hybrid);
  CHECK_THROWS(policy_decide(PolicyKind::Reinforce, s, o, cfg, rng));
}

TEST_CASE("make_policy_state layout") {
  const ControllerConfig cfg;
  const auto s = make_policy_state(12, 3.99, 3.64, 2.41, 2.0, cfg);
  const PolicyState10 expect{12, 3.99, 3.64, 2.41, 2.0, 3.64, 2.41, 30, 1.005, 90};
  CHECK(s == expect);
  const auto n = normalize_state(s);
  CHECK(n[0] == doctest::Approx(0.12));
  CHECK(n[7] == doctest::Approx(0.3));
  CHECK(n[9] == doctest::Approx(0.9));
}

TEST_CASE("mlp_forward examples") {
  Rng rng(3);
  const auto zero = MlpParams::zeros();
  const auto c = mlp_forward(zero, random_state(rng));
  CHECK(c.probs(0) == 0.5);
  CHECK(c.probs(1) == 0.5);

  auto biased = MlpParams::zeros();
  biased.b3(0) = 10.0;
  biased.b3(1) = -10.0;
  CHECK(mlp_forward(biased, random_state(rng)).probs(0) == doctest::Approx(1.0).epsilon(1e-6));

  const std::vector<double> wrong(9, 0.0);
  CHECK_THROWS_AS(mlp_forward(zero, wrong), DimensionError);
}

TEST_CASE("mlp_forward matches a loop implementation") {
  Rng rng(4);
  for (int n = 0; n < 20; ++n) {
    const auto p = MlpParams::init_uniform({}, rng);
    const auto s = random_state(rng);
    const auto c = mlp_forward(p, s);
    const auto ref = forward_loops(p, s);
    CHECK(c.probs(0) == doctest::Approx(ref[0]).epsilon(1e-12));
    CHECK(c.probs(1) == doctest::Approx(ref[1]).epsilon(1e-12));
    CHECK(c.probs.sum() == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("discounted returns") {
  Episode ep(3);
  ep[0].reward = 1;
  ep[1].reward = 2;
  ep[2].reward = 3;
  const auto g = discounted_returns(ep, 0.5, false);
  CHECK(g == std::vector<double>{1 + 0.5 * (2 + 0.5 * 3), 2 + 0.5 * 3, 3});
  const auto gn = discounted_returns(ep, 0.5, true);
  CHECK(gn[2] == 1.0);
}

TEST_CASE("zero rewards leave parameters unchanged") {
  Rng rng(5);
  const auto p = MlpParams::init_uniform({}, rng);
  Episode ep = random_episode(rng, 8);
  for (auto& t : ep) t.reward = 0.0;
  CHECK(reinforce_update(p, ep, 2e-4, 0.99) == p);
  CHECK_THROWS_AS(reinforce_update(p, Episode{}, 2e-4, 0.99), ValidationError);
}

TEST_CASE("policy gradient matches central finite differences") {
  Rng rng(6);
  const auto p = MlpParams::init_uniform({}, rng);
  const ReinforceConfig cfg;
  for (std::size_t len : {std::size_t{1}, std::size_t{5}}) {
    const Episode ep = random_episode(rng, len);
    const auto grad = policy_gradient(p, ep, cfg);
    const double h = 1e-5;
    for (int layer = 0; layer < 3; ++layer) {
      std::uniform_int_distribution<std::size_t> pick(0, p.layer_size(layer) - 1);
      for (int n = 0; n < 20; ++n) {
        const std::size_t idx = pick(rng);
        MlpParams plus = p, minus = p;
        plus.at(layer, idx) += h;
        minus.at(layer, idx) -= h;
        const double fd = (policy_objective(plus, ep, cfg) - policy_objective(minus, ep, cfg)) / (2 * h);
        const double an = grad.at(layer, idx);
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
        CHECK(std::abs(fd - an) / scale < 1e-4);
      }
    }
  }
}

TEST_CASE("updates are deterministic") {
  Rng a(7), b(7);
  const auto pa = MlpParams::init_uniform({}, a);
  const auto pb = MlpParams::init_uniform({}, b);
  REQUIRE(pa == pb);
  const Episode ea = random_episode(a, 6);
  const Episode eb = random_episode(b, 6);
  ReinforceAgent ag1(pa), ag2(pb);
  ag1.update(ea);
  ag1.update(ea);
  ag2.update(eb);
  ag2.update(eb);
  CHECK(ag1.params() == ag2.params());
  CHECK_FALSE(ag1.params() == pa);
}

TEST_CASE("flop accounting") {
  const MlpDims dims;
  const auto mac = mlp_flops(dims);
  CHECK(mac.linear == 35840);
  CHECK(mac.total() == 36101);
  CHECK(std::abs(static_cast<double>(mac.total()) - kReportedReinforceFlops) / kReportedReinforceFlops < 0.02);
  CHECK(mlp_flops(dims, FlopConvention::MulAddNoBias).total() == kReportedReinforceFlops);

  // 1 -> 1 -> 1 -> 1: three MACs at 2 FLOPs, two ReLUs, softmax over one output
  // (one exp and one divide, no adds).
  const MlpDims tiny{1, 1, 1, 1};
  CHECK(mlp_flops(tiny).linear == 6);
  CHECK(mlp_flops(tiny).activation == 4);
  CHECK(mlp_flops(tiny, FlopConvention::MulAddNoBias).total() == 3);

  CHECK(policy_flops(PolicyKind::AlwaysOdn, DppRule::ServiceOnly) == 0);
  CHECK(policy_flops(PolicyKind::AlwaysHybrid, DppRule::ServiceOnly) == 0);
  CHECK(policy_flops(PolicyKind::Dpp, DppRule::ServiceOnly) == 7);
  CHECK(policy_flops(PolicyKind::Reinforce, DppRule::ServiceOnly) == 36101);
}

TEST_CASE("parameter file round trip") {
  Rng rng(8);
  const auto p = MlpParams::init_uniform({}, rng);
  std::stringstream buf;
  save_mlp(buf, p);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 6) == "FGMLP1");
  CHECK(bytes.size() == 6 + 4 + 4 * 4 + 8 * p.parameter_count());
  std::stringstream in(bytes);
  CHECK(load_mlp(in) == p);

  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS(load_mlp(cut));
  std::stringstream bad("XXMLP1" + bytes.substr(6));
  CHECK_THROWS(load_mlp(bad));
}

TEST_CASE("training beats the uniform-random policy") {
  const ScenarioConfig sc = stationary_scenario();
  const ControllerConfig ctl;
  const ReinforceAgent uniform(MlpParams::zeros());
  const double random_reward = mean_reward(sc, ctl, uniform, 4, 100);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TrainingConfig tc{200, 50, seed};
    const auto agent = train_reinforce(sc, ctl, tc);
    const double trained = mean_reward(sc, ctl, agent, 4, 100);
    INFO("seed " << seed << " trained " << trained << " random " << random_reward);
    CHECK(trained > random_reward);
  }
}
