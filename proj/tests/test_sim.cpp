#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flowguard/error.hpp"
#include "flowguard/sim.hpp"

using namespace flowguard;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_scenario(std::size_t horizon = 200) {
  ScenarioConfig sc;
  sc.horizon = horizon;
  sc.flow_rows = 32;
  sc.flow_cols = 32;
  return sc;
}

FrameObservation hand_frame() {
  FrameObservation f;
  f.flow = FlowMap(16, 16, 0.0);
  for (std::size_t r = 4; r <= 6; ++r)
    for (std::size_t c = 4; c <= 6; ++c) f.flow(r, c) = 8.0;
  f.grid = ConfidenceGrid(4, 4, 1);
  const Box obj{0.33, 0.33, 0.2, 0.2};
  f.grid.set(1, 1, 0, 0.3, obj);
  f.truth.push_back(obj);
  f.motion.push_back(8.0);
  return f;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("flowguard_test_sim_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("stationary frame without noise has constant flow") {
  ScenarioConfig sc = small_scenario();
  sc.flow_noise = 0.0;
  Rng rng(1);
  for (int n = 0; n < 20; ++n) {
    const auto f = generate_frame(sc, Regime::Stationary, rng);
    CHECK(f.flow.min() == f.flow.max());
  }
}

TEST_CASE("moving object gives the largest deviation inside its box") {
  ScenarioConfig sc = small_scenario();
  sc.flow_noise = 0.0;
  sc.mean_objects_driving = 50.0;
  sc.max_objects = 1;
  Rng rng(2);
  const auto f = generate_frame(sc, Regime::Driving, rng);
  REQUIRE(f.truth.size() == 1);
  const auto dev = flowmap::center_abs_median(flowmap::shift_min(f.flow));
  const Box& b = f.truth[0];
  const auto cx = static_cast<std::size_t>(b.cx * 32);
  const auto cy = static_cast<std::size_t>(b.cy * 32);
  CHECK(dev(cy, cx) == dev.max());
  CHECK(dev(cy, cx) > 0.0);
}

TEST_CASE("frame generation is deterministic") {
  const ScenarioConfig sc = small_scenario();
  GeneratedFrames a(sc, 42), b(sc, 42);
  for (int n = 0; n < 30; ++n) {
    const auto fa = a.next();
    const auto fb = b.next();
    CHECK(fa.flow == fb.flow);
    CHECK(fa.grid == fb.grid);
    CHECK(fa.truth == fb.truth);
  }
}

TEST_CASE("emulate_detector examples") {
  const FrameObservation f = hand_frame();
  ScenarioConfig sc = small_scenario();
  const auto odn = emulate_detector(f, ModelChoice::Odn, sc);
  const auto hyb = emulate_detector(f, ModelChoice::Hybrid, sc);
  CHECK(odn.detections.empty());
  REQUIRE(hyb.detections.size() == 1);
  CHECK(hyb.metrics.correctly_detected == 1);

  FrameObservation empty;
  empty.flow = FlowMap(8, 8, 0.0);
  empty.grid = ConfidenceGrid(4, 4, 1);
  sc.latency = LatencyModel::gpu();
  CHECK(emulate_detector(empty, ModelChoice::Odn, sc).latency == 0.055);
  CHECK(emulate_detector(empty, ModelChoice::Hybrid, sc).latency == 0.083);
}

TEST_CASE("zero-deviation frame: Hybrid admits a superset of ODN") {
  ScenarioConfig sc = small_scenario();
  sc.flow_noise = 0.0;
  Rng rng(3);
  for (int n = 0; n < 50; ++n) {
    auto f = generate_frame(sc, Regime::Stationary, rng);
    const auto thr = flowmap::process(f.flow, sc.grid_rows, sc.grid_cols, sc.boxes_per_cell, sc.c_th);
    for (double t : thr) CHECK(t < sc.c_th);
    const auto odn = emulate_detector(f, ModelChoice::Odn, sc);
    const auto hyb = emulate_detector(f, ModelChoice::Hybrid, sc);
    for (const auto& d : odn.pre_nms) {
      CHECK(std::any_of(hyb.pre_nms.begin(), hyb.pre_nms.end(),
                        [&](const Detection& e) { return e.i == d.i && e.j == d.j; }));
    }
  }
}

TEST_CASE("step examples") {
  SUBCASE("always-ODN on empty scenes keeps the queue at zero") {
    for (auto lat : {LatencyModel::gpu(), LatencyModel::cpu()}) {
      ScenarioConfig sc = small_scenario(100);
      sc.mean_objects_driving = sc.mean_objects_stationary = 0.0;
      sc.false_positive_rate = 0.0;
      sc.latency = lat;
      const auto res = run(sc, ControllerConfig{}, PolicyKind::AlwaysOdn);
      CHECK(res.summary.max_q == 0.0);
    }
  }
  SUBCASE("always-Hybrid on the CPU profile grows by about 0.35 per step") {
    ScenarioConfig sc = small_scenario(100);
    sc.mean_objects_driving = sc.mean_objects_stationary = 0.0;
    sc.false_positive_rate = 0.0;
    const auto res = run(sc, ControllerConfig{}, PolicyKind::AlwaysHybrid);
    for (std::size_t t = 1; t < res.steps.size(); ++t)
      CHECK(res.steps[t].q - res.steps[t - 1].q == doctest::Approx(0.35).epsilon(1e-9));
  }
  SUBCASE("DPP picks Hybrid on a moving scene with an empty queue") {
    ScenarioConfig sc = small_scenario(1);
    sc.mean_objects_driving = 3.0;
    const auto res = run(sc, ControllerConfig{}, PolicyKind::Dpp);
    REQUIRE(res.steps.size() == 1);
    CHECK(res.steps[0].q == 0.0);
    CHECK(res.steps[0].alpha == ModelChoice::Hybrid);
  }
}

TEST_CASE("runs are deterministic and replayable") {
  const ScenarioConfig sc = small_scenario(300);
  ControllerConfig ctl;
  ctl.rule = DppRule::ArrivalAware;
  for (PolicyKind k : {PolicyKind::Dpp, PolicyKind::AlwaysOdn, PolicyKind::AlwaysHybrid}) {
    const auto a = run(sc, ctl, k);
    const auto b = run(sc, ctl, k);
    CHECK(a == b);
    CHECK(replay_matches(a));
    CHECK(controller::drift_bound_check(drift_trajectory(a)).ok());
    for (const auto& r : a.steps) CHECK(r.q >= 0.0);
  }
  Rng init(1);
  const ReinforceAgent agent(MlpParams::init_uniform({}, init));
  CHECK(run(sc, ctl, PolicyKind::Reinforce, &agent) == run(sc, ctl, PolicyKind::Reinforce, &agent));
  CHECK_THROWS_AS(run(sc, ctl, PolicyKind::Reinforce), ValidationError);
}

TEST_CASE("policies see identical frames") {
  const ScenarioConfig sc = small_scenario(100);
  const auto t = run(sc, ControllerConfig{}, PolicyKind::AlwaysOdn);
  const auto h = run(sc, ControllerConfig{}, PolicyKind::AlwaysHybrid);
  for (std::size_t n = 0; n < t.steps.size(); ++n) {
    CHECK(t.steps[n].regime == h.steps[n].regime);
    CHECK(t.steps[n].num_hybrid == h.steps[n].num_hybrid);
    CHECK(t.steps[n].num_odn == h.steps[n].num_odn);
  }
}

TEST_CASE("horizon zero") {
  const auto res = run(small_scenario(0), ControllerConfig{}, PolicyKind::Dpp);
  CHECK(res.steps.empty());
  CHECK(res.summary == Summary{});
  CHECK_THROWS_AS(summarize(res, 500), ValidationError);
}

TEST_CASE("summarize examples") {
  SimResult r;
  r.final_q = 5;
  for (std::size_t t = 0; t < 10; ++t) {
    StepRecord s;
    s.t = t;
    s.q = 5;
    s.alpha = ModelChoice::Odn;
    s.flops = 7;
    r.steps.push_back(s);
  }
  const auto s = summarize(r, 500);
  CHECK(s.avg_q == 5.0);
  CHECK(s.hybrid_count == 0);
  CHECK(s.odn_count == 10);
  CHECK_FALSE(s.overflow);

  const auto dpp = run(small_scenario(100), ControllerConfig{}, PolicyKind::Dpp);
  CHECK(dpp.summary.total_flops == 100 * controller::dpp_flops());
}

TEST_CASE("time series round trip") {
  const ScenarioConfig sc = small_scenario(50);
  std::vector<SimResult> results{run(sc, ControllerConfig{}, PolicyKind::Dpp),
                                 run(sc, ControllerConfig{}, PolicyKind::AlwaysOdn)};
  for (char sep : {',', '\t'}) {
    std::stringstream buf;
    write_timeseries(buf, results, sep);
    const auto back = read_timeseries(buf, sc.overflow_cap, sep);
    REQUIRE(back.size() == 2);
    CHECK(back[0].policy == PolicyKind::Dpp);
    REQUIRE(back[1].steps.size() == 50);
    for (std::size_t n = 0; n < 50; ++n) {
      CHECK(back[1].steps[n].q == results[1].steps[n].q);
      CHECK(back[1].steps[n].reward == results[1].steps[n].reward);
      CHECK(back[1].steps[n].metrics == results[1].steps[n].metrics);
    }
  }
}

TEST_CASE("trace replay") {
  const fs::path dir = scratch_dir("trace");
  {
    std::ofstream flow(dir / "f0.csv");
    flow << "0,0,0,0\n0,9,9,0\n0,9,9,0\n0,0,0,0\n";
    std::ofstream conf(dir / "c0.csv");
    conf << "kind,i,j,k,confidence,cx,cy,w,h\n"
         << "box,0,0,0,0.3,0.25,0.25,0.3,0.3\n"
         << "box,1,1,0,0.9,0.75,0.75,0.3,0.3\n"
         << "truth,0,0,0,0,0.25,0.25,0.3,0.3\n"
         << "truth,0,0,0,0,0.75,0.75,0.3,0.3\n";
    std::ofstream trace(dir / "trace.csv");
    trace << "t,regime,num_objects,flow_file,conf_file\n";
    for (int t = 0; t < 3; ++t) trace << t << ",driving,2,f0.csv,c0.csv\n";
  }
  ScenarioConfig sc = small_scenario(10);
  sc.grid_rows = 2;
  sc.grid_cols = 2;
  sc.boxes_per_cell = 1;
  sc.trace = (dir / "trace.csv").string();
  const auto h = run(sc, ControllerConfig{}, PolicyKind::AlwaysHybrid);
  const auto t = run(sc, ControllerConfig{}, PolicyKind::AlwaysOdn);
  REQUIRE(h.steps.size() == 3);
  CHECK(h.steps[0].metrics.correctly_detected == 2);
  CHECK(t.steps[0].metrics.correctly_detected == 1);
  CHECK(h.steps[0].metrics.true_positive_rate == 1.0);
  CHECK(t.steps[0].metrics.true_positive_rate == 1.0);

  {
    std::ofstream trace(dir / "bad.csv");
    trace << "t,regime,flow_file\n0,driving,f0.csv\n";
  }
  sc.trace = (dir / "bad.csv").string();
  CHECK_THROWS_AS(run(sc, ControllerConfig{}, PolicyKind::Dpp), IoError);
  fs::remove_all(dir);
}

TEST_CASE("scenario validation names the field") {
  ScenarioConfig sc;
  sc.detect_prob = 1.5;
  try {
    sc.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("detect_prob") != std::string::npos);
  }
}

TEST_CASE("training is deterministic") {
  ScenarioConfig sc = small_scenario();
  const TrainingConfig tc{3, 20, 5};
  const auto a = train_reinforce(sc, ControllerConfig{}, tc);
  const auto b = train_reinforce(sc, ControllerConfig{}, tc);
  CHECK(a.params() == b.params());
}

TEST_CASE("gnuplot outputs have one column per policy") {
  const ScenarioConfig sc = small_scenario(5);
  std::vector<SimResult> results{run(sc, ControllerConfig{}, PolicyKind::Dpp),
                                 run(sc, ControllerConfig{}, PolicyKind::AlwaysOdn)};
  std::stringstream q, acc, sum;
  write_queue_dat(q, results);
  write_accuracy_dat(acc, results);
  write_summary(sum, results);
  std::string line;
  std::size_t data = 0;
  while (std::getline(q, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    std::size_t cols = 0;
    while (ls >> tok) ++cols;
    CHECK(cols == 3);
    ++data;
  }
  CHECK(data == 5);
  std::size_t rows = 0;
  while (std::getline(sum, line)) ++rows;
  CHECK(rows == 3);
}
