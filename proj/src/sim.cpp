#include "flowguard/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "flowguard/error.hpp"
#include "flowguard/io.hpp"

namespace flowguard {

namespace {

Rng derive_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

constexpr std::uint32_t kSceneStream = 1;
constexpr std::uint32_t kPolicyStream = 2;

double uniform(Rng& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(std::string("scenario.") + field + ": " + what);
}

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

Box cell_box(const ConfidenceGrid& g, std::size_t i, std::size_t j) {
  const double cw = 1.0 / static_cast<double>(g.cols());
  const double ch = 1.0 / static_cast<double>(g.rows());
  return {(static_cast<double>(j) + 0.5) * cw, (static_cast<double>(i) + 0.5) * ch, cw, ch};
}

std::size_t cell_of(double coord, std::size_t n) {
  const auto c = static_cast<std::size_t>(std::floor(coord * static_cast<double>(n)));
  return std::min(c, n - 1);
}

}  // namespace

std::string_view to_string(Regime r) { return r == Regime::Driving ? "driving" : "stationary"; }

std::optional<Regime> parse_regime(std::string_view s) {
  if (s == "driving") return Regime::Driving;
  if (s == "stationary") return Regime::Stationary;
  return std::nullopt;
}

double LatencyModel::latency(ModelChoice c, std::size_t num_objects) const {
  const double n = static_cast<double>(num_objects);
  return c == ModelChoice::Hybrid ? base_hybrid + per_object_hybrid * n : base_odn + per_object_odn * n;
}

void ScenarioConfig::validate() const {
  require(horizon <= (std::size_t{1} << 32), "horizon", "too large");
  require(is_prob(p_drive_to_stop), "p_drive_to_stop", "must be a probability");
  require(is_prob(p_stop_to_drive), "p_stop_to_drive", "must be a probability");
  require(mean_objects_driving >= 0.0, "mean_objects_driving", "must be >= 0");
  require(mean_objects_stationary >= 0.0, "mean_objects_stationary", "must be >= 0");
  require(min_box_size > 0.0 && min_box_size <= max_box_size && max_box_size <= 1.0, "min_box_size",
          "need 0 < min_box_size <= max_box_size <= 1");
  require(flow_rows > 0 && flow_cols > 0, "flow_rows", "flow map dims must be positive");
  require(object_motion_min >= 0.0 && object_motion_min <= object_motion_max, "object_motion_min",
          "need 0 <= min <= max");
  require(flow_noise >= 0.0, "flow_noise", "must be >= 0");
  require(grid_rows > 0 && grid_cols > 0 && boxes_per_cell > 0, "grid_rows", "grid dims must be positive");
  require(is_prob(detect_prob), "detect_prob", "must be a probability");
  require(is_prob(hybrid_gain), "hybrid_gain", "must be a probability");
  require(is_prob(static_near_miss), "static_near_miss", "must be a probability");
  require(near_miss_low >= 0.0 && near_miss_low <= near_miss_high && near_miss_high <= 1.0,
          "near_miss_low", "need 0 <= low <= high <= 1");
  require(background_confidence_max >= 0.0 && background_confidence_max <= 1.0,
          "background_confidence_max", "must lie in [0, 1]");
  require(is_prob(false_positive_rate), "false_positive_rate", "must be a probability");
  require(false_positive_low >= 0.0 && false_positive_low <= false_positive_high &&
              false_positive_high <= 1.0,
          "false_positive_low", "need 0 <= low <= high <= 1");
  require(c_th > 0.0 && c_th <= 1.0, "c_th", "must lie in (0, 1]");
  require(nms_threshold >= 0.0 && nms_threshold <= 1.0, "nms_threshold", "must lie in [0, 1]");
  require(match_iou > 0.0 && match_iou <= 1.0, "match_iou", "must lie in (0, 1]");
  require(latency.base_hybrid > 0.0 && latency.base_odn > 0.0, "latency_hybrid", "latencies must be positive");
  require(latency.per_object_hybrid > 0.0 && latency.per_object_odn > 0.0, "per_object_hybrid",
          "per-object latencies must be positive");
  require(overflow_cap > 0.0, "overflow_cap", "must be positive");
}

Regime next_regime(Regime current, const ScenarioConfig& cfg, Rng& rng) {
  const double p = current == Regime::Driving ? cfg.p_drive_to_stop : cfg.p_stop_to_drive;
  const bool flip = std::bernoulli_distribution(p)(rng);
  if (!flip) return current;
  return current == Regime::Driving ? Regime::Stationary : Regime::Driving;
}

FrameObservation generate_frame(const ScenarioConfig& cfg, Regime regime, Rng& rng) {
  FrameObservation f;
  f.regime = regime;
  const bool driving = regime == Regime::Driving;

  const double mean = driving ? cfg.mean_objects_driving : cfg.mean_objects_stationary;
  std::size_t n = 0;
  if (mean > 0.0) n = std::min<std::size_t>(std::poisson_distribution<int>(mean)(rng), cfg.max_objects);
  for (std::size_t o = 0; o < n; ++o) {
    const double w = uniform(rng, cfg.min_box_size, cfg.max_box_size);
    const double h = uniform(rng, cfg.min_box_size, cfg.max_box_size);
    const double cx = uniform(rng, w / 2, 1.0 - w / 2);
    const double cy = uniform(rng, h / 2, 1.0 - h / 2);
    f.truth.push_back({cx, cy, w, h});
    f.motion.push_back(driving ? uniform(rng, cfg.object_motion_min, cfg.object_motion_max) : 0.0);
  }

  // Flow: background level, plateau of extra motion inside each object, Gaussian noise.
  const double background = driving ? cfg.background_flow_driving : cfg.background_flow_stationary;
  f.flow = FlowMap(cfg.flow_rows, cfg.flow_cols, background);
  std::vector<double> extra(f.flow.size(), 0.0);
  for (std::size_t o = 0; o < n; ++o) {
    const Box& b = f.truth[o];
    for (std::size_t i = 0; i < cfg.flow_rows; ++i) {
      const double y = (static_cast<double>(i) + 0.5) / static_cast<double>(cfg.flow_rows);
      if (std::abs(y - b.cy) > b.h / 2) continue;
      for (std::size_t j = 0; j < cfg.flow_cols; ++j) {
        const double x = (static_cast<double>(j) + 0.5) / static_cast<double>(cfg.flow_cols);
        if (std::abs(x - b.cx) > b.w / 2) continue;
        double& e = extra[i * cfg.flow_cols + j];
        e = std::max(e, f.motion[o]);
      }
    }
  }
  std::normal_distribution<double> noise(0.0, cfg.flow_noise);
  for (std::size_t n2 = 0; n2 < f.flow.size(); ++n2) {
    double v = background + extra[n2];
    if (cfg.flow_noise > 0.0) v += noise(rng);
    f.flow.values()[n2] = v;
  }

  // Confidence grid: low background everywhere, then objects, then an occasional false positive.
  f.grid = ConfidenceGrid(cfg.grid_rows, cfg.grid_cols, cfg.boxes_per_cell);
  for (std::size_t k = 0; k < cfg.boxes_per_cell; ++k) {
    for (std::size_t i = 0; i < cfg.grid_rows; ++i) {
      for (std::size_t j = 0; j < cfg.grid_cols; ++j) {
        const double c = cfg.background_confidence_max > 0.0 ? uniform(rng, 0.0, cfg.background_confidence_max) : 0.0;
        f.grid.set(i, j, k, c, cell_box(f.grid, i, j));
      }
    }
  }
  std::uniform_int_distribution<std::size_t> pick_k(0, cfg.boxes_per_cell - 1);
  const double hit_lo = std::min(cfg.c_th + 0.05, 0.99);
  const double hit_hi = std::max(hit_lo, 0.95);
  for (std::size_t o = 0; o < n; ++o) {
    const Box& t = f.truth[o];
    const std::size_t i = cell_of(t.cy, cfg.grid_rows);
    const std::size_t j = cell_of(t.cx, cfg.grid_cols);
    const std::size_t k = pick_k(rng);
    double c;
    if (std::bernoulli_distribution(cfg.detect_prob)(rng)) {
      c = uniform(rng, hit_lo, hit_hi);
    } else {
      const double gain = f.motion[o] > 0.0 ? cfg.hybrid_gain : cfg.static_near_miss;
      c = std::bernoulli_distribution(gain)(rng) ? uniform(rng, cfg.near_miss_low, cfg.near_miss_high)
                                                 : uniform(rng, 0.0, cfg.background_confidence_max);
    }
    Box b = t;
    b.cx += uniform(rng, -0.03, 0.03) * t.w;
    b.cy += uniform(rng, -0.03, 0.03) * t.h;
    if (c > f.grid.confidence(i, j, k)) f.grid.set(i, j, k, c, b);
  }
  if (std::bernoulli_distribution(cfg.false_positive_rate)(rng)) {
    std::uniform_int_distribution<std::size_t> pick_i(0, cfg.grid_rows - 1);
    std::uniform_int_distribution<std::size_t> pick_j(0, cfg.grid_cols - 1);
    const std::size_t i = pick_i(rng);
    const std::size_t j = pick_j(rng);
    const std::size_t k = pick_k(rng);
    const double c = uniform(rng, cfg.false_positive_low, cfg.false_positive_high);
    Box b = cell_box(f.grid, i, j);
    b.w *= 2.0;
    b.h *= 2.0;
    if (c > f.grid.confidence(i, j, k)) f.grid.set(i, j, k, c, b);
  }
  return f;
}

GeneratedFrames::GeneratedFrames(ScenarioConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(derive_rng(seed, kSceneStream)), regime_(cfg_.initial_regime) {}

FrameObservation GeneratedFrames::next() {
  if (t_ > 0) regime_ = next_regime(regime_, cfg_, rng_);
  ++t_;
  return generate_frame(cfg_, regime_, rng_);
}

std::size_t GeneratedFrames::available() const { return std::numeric_limits<std::size_t>::max(); }

ConfidenceGrid read_confidence_file(const std::filesystem::path& path, std::size_t rows,
                                    std::size_t cols, std::size_t k, std::vector<Box>* truth) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ConfidenceGrid grid(rows, cols, k);
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = io::split_csv_line(line);
    if (header) {
      header = false;
      if (f.size() != 9 || f[0] != "kind") {
        throw IoError(path.string() + ": expected header kind,i,j,k,confidence,cx,cy,w,h");
      }
      continue;
    }
    if (f.size() != 9) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 9 fields");
    try {
      const Box b{std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8])};
      if (f[0] == "truth") {
        if (truth) truth->push_back(b);
      } else if (f[0] == "box") {
        grid.set(std::stoul(f[1]), std::stoul(f[2]), std::stoul(f[3]), std::stod(f[4]), b);
      } else {
        throw IoError("unknown kind '" + f[0] + "'");
      }
    } catch (const std::logic_error& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return grid;
}

TraceFrames::TraceFrames(const std::filesystem::path& trace, const ScenarioConfig& cfg) : cfg_(cfg) {
  std::ifstream in(trace);
  if (!in) throw IoError("cannot open trace " + trace.string());
  const auto base = trace.parent_path();
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = io::split_csv_line(line);
    if (header) {
      header = false;
      if (f != std::vector<std::string>{"t", "regime", "num_objects", "flow_file", "conf_file"}) {
        throw IoError(trace.string() + ": expected header t,regime,num_objects,flow_file,conf_file");
      }
      continue;
    }
    if (f.size() != 5) throw IoError(trace.string() + ":" + std::to_string(lineno) + ": expected 5 fields");
    const auto regime = parse_regime(f[1]);
    if (!regime) throw IoError(trace.string() + ":" + std::to_string(lineno) + ": bad regime '" + f[1] + "'");
    Row r;
    try {
      r.t = std::stoul(f[0]);
      r.num_objects = std::stoul(f[2]);
    } catch (const std::logic_error&) {
      throw IoError(trace.string() + ":" + std::to_string(lineno) + ": bad integer field");
    }
    r.regime = *regime;
    r.flow_file = base / f[3];  // operator/ keeps absolute right-hand paths as-is
    r.conf_file = base / f[4];
    rows_.push_back(std::move(r));
  }
}

FrameObservation TraceFrames::next() {
  if (cursor_ >= rows_.size()) throw IoError("trace exhausted");
  const Row& r = rows_[cursor_++];
  FrameObservation f;
  f.regime = r.regime;
  f.flow = io::load_flow_map(r.flow_file);
  f.grid = read_confidence_file(r.conf_file, cfg_.grid_rows, cfg_.grid_cols, cfg_.boxes_per_cell, &f.truth);
  f.motion.assign(f.truth.size(), 0.0);
  return f;
}

ModelOutcome emulate_detector(const FrameObservation& frame, ModelChoice alpha, const ScenarioConfig& cfg,
                              const ThresholdVector* hybrid_thresholds) {
  ModelOutcome out;
  if (alpha == ModelChoice::Odn) {
    out.pre_nms = detection::threshold_detections(frame.grid, cfg.c_th);
  } else if (hybrid_thresholds) {
    out.pre_nms = detection::threshold_detections(frame.grid, *hybrid_thresholds);
  } else {
    const auto thr = flowmap::process(frame.flow, frame.grid.rows(), frame.grid.cols(), frame.grid.k(), cfg.c_th);
    out.pre_nms = detection::threshold_detections(frame.grid, thr);
  }
  out.detections = detection::nms(out.pre_nms, cfg.nms_threshold);
  out.latency = cfg.latency.latency(alpha, out.detections.size());
  out.metrics = detection::score_against_truth(out.detections, frame.truth, cfg.match_iou);
  return out;
}

Summary summarize(const SimResult& result, double overflow_cap) {
  if (result.steps.empty()) throw ValidationError("cannot summarize an empty result");
  Summary s;
  s.steps = result.steps.size();
  double q_sum = 0.0, acc_sum = 0.0, drift_sum = 0.0;
  s.max_q = result.final_q;
  for (const auto& r : result.steps) {
    q_sum += r.q;
    acc_sum += r.metrics.true_positive_rate;
    drift_sum += r.a - r.b;
    s.max_q = std::max(s.max_q, r.q);
    (r.alpha == ModelChoice::Hybrid ? s.hybrid_count : s.odn_count) += 1;
    s.total_flops += r.flops;
  }
  const double n = static_cast<double>(s.steps);
  s.avg_q = q_sum / n;
  s.avg_accuracy = acc_sum / n;
  s.mean_drift = drift_sum / n;
  s.final_q = result.final_q;
  s.overflow = s.max_q > overflow_cap;
  return s;
}

std::vector<controller::DriftSample> drift_trajectory(const SimResult& result) {
  std::vector<controller::DriftSample> out;
  out.reserve(result.steps.size());
  for (const auto& r : result.steps) out.push_back({r.q, r.a, r.b});
  return out;
}

bool replay_matches(const SimResult& result) {
  double q = 0.0;
  for (const auto& r : result.steps) {
    if (r.q != q) return false;
    q = controller::queue_update(q, r.a, r.b);
  }
  return q == result.final_q;
}

Simulator::Simulator(ScenarioConfig scenario, ControllerConfig controller, PolicyKind policy,
                     const ReinforceAgent* agent)
    : scenario_(std::move(scenario)),
      controller_(controller),
      policy_(policy),
      agent_(agent),
      policy_rng_(derive_rng(scenario_.seed, kPolicyStream)) {
  scenario_.validate();
  controller_.validate();
  if (policy_ == PolicyKind::Reinforce && agent_ == nullptr) {
    throw ValidationError("REINFORCE policy needs an agent");
  }
  if (scenario_.trace.empty()) {
    frames_ = std::make_unique<GeneratedFrames>(scenario_, scenario_.seed);
  } else {
    frames_ = std::make_unique<TraceFrames>(scenario_.trace, scenario_);
  }
  horizon_ = std::min(scenario_.horizon, frames_->available());
}

bool Simulator::done() const { return state_.t >= horizon_; }

StepRecord Simulator::step(Episode* episode) {
  if (done()) throw ValidationError("simulation horizon reached");
  const FrameObservation frame = frames_->next();
  const auto thresholds = flowmap::process(frame.flow, frame.grid.rows(), frame.grid.cols(), frame.grid.k(),
                                           scenario_.c_th);
  const ModelOutcome hybrid = emulate_detector(frame, ModelChoice::Hybrid, scenario_, &thresholds);
  const ModelOutcome odn = emulate_detector(frame, ModelChoice::Odn, scenario_);

  const StepObservation current{hybrid.num_objects(), odn.num_objects(), hybrid.latency, odn.latency};
  StepObservation estimate = current;
  if (scenario_.estimates == EstimateSource::PreviousFrame) {
    estimate = state_.has_prev_obs
                   ? state_.prev_obs
                   : StepObservation{0, 0, scenario_.latency.base_hybrid, scenario_.latency.base_odn};
  }

  const double q = state_.q;
  const PolicyState10 state10 = make_policy_state(
      q, state_.prev_arrival, state_.prev_service, controller::service(ModelChoice::Hybrid, controller_),
      controller::performance(ModelChoice::Hybrid, estimate.num_hybrid, estimate.num_odn, controller_),
      controller_);
  const ModelChoice alpha = policy_decide(policy_, state10, estimate, controller_, policy_rng_, agent_);
  const ModelOutcome& chosen = alpha == ModelChoice::Hybrid ? hybrid : odn;

  StepRecord r;
  r.t = state_.t;
  r.regime = frame.regime;
  r.alpha = alpha;
  r.q = q;
  r.latency = chosen.latency;
  r.a = controller::arrival(controller_.w_fps, scenario_.arrival_coupled ? chosen.latency : odn.latency);
  r.b = controller::service(alpha, controller_);
  r.num_hybrid = hybrid.num_objects();
  r.num_odn = odn.num_objects();
  r.performance = controller::performance(alpha, r.num_hybrid, r.num_odn, controller_);
  r.metrics = chosen.metrics;
  r.flops = policy_flops(policy_, controller_.rule);
  r.cumulative_flops = state_.cumulative_flops + r.flops;
  r.reward = controller_.V * r.performance + q * r.b;

  if (episode) episode->push_back({normalize_state(state10), alpha, r.reward});

  state_.q = controller::queue_update(q, r.a, r.b);
  state_.prev_arrival = r.a;
  state_.prev_service = r.b;
  state_.cumulative_flops = r.cumulative_flops;
  state_.prev_obs = current;
  state_.has_prev_obs = true;
  ++state_.t;
  return r;
}

SimResult Simulator::run(Episode* episode) {
  SimResult result;
  result.policy = policy_;
  result.steps.reserve(horizon_ - std::min(horizon_, state_.t));
  while (!done()) result.steps.push_back(step(episode));
  result.final_q = state_.q;
  if (!result.steps.empty()) result.summary = summarize(result, scenario_.overflow_cap);
  return result;
}

SimResult run(const ScenarioConfig& scenario, const ControllerConfig& controller, PolicyKind policy,
              const ReinforceAgent* agent) {
  return Simulator(scenario, controller, policy, agent).run();
}

ReinforceAgent train_reinforce(const ScenarioConfig& scenario, const ControllerConfig& controller,
                               const TrainingConfig& training, const ReinforceConfig& reinforce) {
  Rng init = derive_rng(training.seed, 0);
  ReinforceAgent agent(MlpParams::init_uniform({}, init), reinforce);
  for (std::size_t e = 0; e < training.episodes; ++e) {
    ScenarioConfig sc = scenario;
    sc.horizon = training.horizon;
    sc.seed = training.seed * 1000003u + e + 1;
    Episode episode;
    Simulator(sc, controller, PolicyKind::Reinforce, &agent).run(&episode);
    if (!episode.empty()) agent.update(episode);
  }
  return agent;
}

void write_timeseries(std::ostream& out, const std::vector<SimResult>& results, char sep) {
  const std::vector<std::string> cols = {"t", "policy", "alpha", "Q", "a", "b", "P", "p", "tpr",
                                         "flops", "regime", "num_h", "num_t", "total", "correct",
                                         "false", "overlapped", "reward"};
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? std::string(1, sep) : "") << cols[c];
  out << '\n';
  using io::format_double;
  for (const auto& res : results) {
    for (const auto& r : res.steps) {
      out << r.t << sep << display_name(res.policy) << sep << to_string(r.alpha) << sep << format_double(r.q)
          << sep << format_double(r.a) << sep << format_double(r.b) << sep << format_double(r.performance)
          << sep << format_double(r.latency) << sep << format_double(r.metrics.true_positive_rate) << sep
          << r.flops << sep << to_string(r.regime) << sep << r.num_hybrid << sep << r.num_odn << sep
          << r.metrics.total_detected << sep << r.metrics.correctly_detected << sep
          << r.metrics.falsely_detected << sep << r.metrics.overlapped_detected << sep
          << format_double(r.reward) << '\n';
    }
  }
}

std::vector<SimResult> read_timeseries(std::istream& in, double overflow_cap, char sep) {
  std::vector<SimResult> results;
  std::map<std::string, std::size_t> by_policy;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    const auto f = io::split_csv_line(line, sep);
    if (f.size() != 18) throw IoError("timeseries line " + std::to_string(lineno) + ": expected 18 fields");
    const auto kind = parse_policy_kind(f[1]);
    const auto regime = parse_regime(f[10]);
    if (!kind || !regime || (f[2] != "H" && f[2] != "T")) {
      throw IoError("timeseries line " + std::to_string(lineno) + ": bad label");
    }
    auto [it, fresh] = by_policy.try_emplace(f[1], results.size());
    if (fresh) {
      results.emplace_back();
      results.back().policy = *kind;
    }
    SimResult& res = results[it->second];
    StepRecord r;
    try {
      r.t = std::stoul(f[0]);
      r.alpha = f[2] == "H" ? ModelChoice::Hybrid : ModelChoice::Odn;
      r.q = std::stod(f[3]);
      r.a = std::stod(f[4]);
      r.b = std::stod(f[5]);
      r.performance = std::stod(f[6]);
      r.latency = std::stod(f[7]);
      r.metrics.true_positive_rate = std::stod(f[8]);
      r.flops = std::stoul(f[9]);
      r.regime = *regime;
      r.num_hybrid = std::stoul(f[11]);
      r.num_odn = std::stoul(f[12]);
      r.metrics.total_detected = std::stoul(f[13]);
      r.metrics.correctly_detected = std::stoul(f[14]);
      r.metrics.falsely_detected = std::stoul(f[15]);
      r.metrics.overlapped_detected = std::stoul(f[16]);
      r.reward = std::stod(f[17]);
    } catch (const std::logic_error&) {
      throw IoError("timeseries line " + std::to_string(lineno) + ": bad numeric field");
    }
    r.cumulative_flops = (res.steps.empty() ? 0 : res.steps.back().cumulative_flops) + r.flops;
    res.steps.push_back(r);
  }
  for (auto& res : results) {
    const auto& last = res.steps.back();
    res.final_q = controller::queue_update(last.q, last.a, last.b);
    res.summary = summarize(res, overflow_cap);
  }
  return results;
}

void write_summary(std::ostream& out, const std::vector<SimResult>& results, char sep) {
  out << "policy" << sep << "steps" << sep << "avg_q" << sep << "max_q" << sep << "final_q" << sep
      << "avg_accuracy" << sep << "mean_drift" << sep << "overflow" << sep << "h_count" << sep << "t_count"
      << sep << "total_flops" << sep << "flops_per_decision" << '\n';
  using io::format_double;
  for (const auto& res : results) {
    const Summary& s = res.summary;
    const std::size_t per = res.steps.empty() ? 0 : res.steps.front().flops;
    out << display_name(res.policy) << sep << s.steps << sep << format_double(s.avg_q) << sep
        << format_double(s.max_q) << sep << format_double(s.final_q) << sep << format_double(s.avg_accuracy)
        << sep << format_double(s.mean_drift) << sep << (s.overflow ? "true" : "false") << sep
        << s.hybrid_count << sep << s.odn_count << sep << s.total_flops << sep << per << '\n';
  }
}

namespace {

template <typename Column>
void write_dat(std::ostream& out, const std::vector<SimResult>& results, const char* title, Column&& column) {
  out << "# " << title << "\n# t";
  std::size_t rows = 0;
  for (const auto& r : results) {
    out << ' ' << display_name(r.policy);
    rows = std::max(rows, r.steps.size());
  }
  out << '\n';
  std::vector<std::vector<double>> series;
  for (const auto& r : results) series.push_back(column(r));
  for (std::size_t t = 0; t < rows; ++t) {
    out << t;
    for (const auto& s : series) out << ' ' << (t < s.size() ? io::format_double(s[t]) : std::string("NaN"));
    out << '\n';
  }
}

}  // namespace

void write_queue_dat(std::ostream& out, const std::vector<SimResult>& results) {
  write_dat(out, results, "queue backlog Q[t]", [](const SimResult& r) {
    std::vector<double> v;
    for (const auto& s : r.steps) v.push_back(s.q);
    return v;
  });
}

void write_accuracy_dat(std::ostream& out, const std::vector<SimResult>& results) {
  write_dat(out, results, "running average accuracy (TPR)", [](const SimResult& r) {
    std::vector<double> v;
    double sum = 0.0;
    for (const auto& s : r.steps) {
      sum += s.metrics.true_positive_rate;
      v.push_back(sum / static_cast<double>(v.size() + 1));
    }
    return v;
  });
}

}  // namespace flowguard
