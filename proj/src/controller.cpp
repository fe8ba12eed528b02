#include "flowguard/controller.hpp"

#include <algorithm>
#include <cmath>

#include "flowguard/error.hpp"

namespace flowguard {

std::string_view to_string(ModelChoice c) { return c == ModelChoice::Hybrid ? "H" : "T"; }

std::string_view to_string(DppRule r) { return r == DppRule::ServiceOnly ? "service_only" : "arrival_aware"; }

void ControllerConfig::validate() const {
  if (!(V >= 0.0) || !std::isfinite(V)) throw ValidationError("V must be a finite value >= 0");
  for (double w : {w1, w2, w_fps, w_p}) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("controller weights must be positive");
  }
}

namespace controller {

double queue_update(double q, double a, double b) {
  if (q < 0.0 || a < 0.0 || b < 0.0) throw ValidationError("queue_update inputs must be non-negative");
  return std::max(q + a - b, 0.0);
}

double arrival(double w_fps, double p) {
  if (!(w_fps > 0.0) || !(p > 0.0)) throw ValidationError("arrival needs w_fps > 0 and p > 0");
  return w_fps * p;
}

double service(ModelChoice alpha, const ControllerConfig& cfg) {
  return alpha == ModelChoice::Hybrid ? cfg.w1 : cfg.w2;
}

double performance(ModelChoice alpha, std::size_t num_hybrid, std::size_t num_odn,
                   const ControllerConfig& cfg) {
  return alpha == ModelChoice::Hybrid ? cfg.w_p * static_cast<double>(num_hybrid)
                                      : static_cast<double>(num_odn);
}

double dpp_score(ModelChoice alpha, double q, const StepObservation& obs, const ControllerConfig& cfg) {
  if (q < 0.0) throw ValidationError("queue backlog must be non-negative");
  const double p = performance(alpha, obs.num_hybrid, obs.num_odn, cfg);
  double drain = service(alpha, cfg);
  if (cfg.rule == DppRule::ArrivalAware) drain -= cfg.w_fps * obs.latency(alpha);
  return cfg.V * p + q * drain;
}

ModelChoice dpp_select(double q, const StepObservation& obs, const ControllerConfig& cfg) {
  const double h = dpp_score(ModelChoice::Hybrid, q, obs, cfg);
  const double t = dpp_score(ModelChoice::Odn, q, obs, cfg);
  if (h > t) return ModelChoice::Hybrid;
  if (t > h) return ModelChoice::Odn;
  return cfg.tie_break == TieBreak::PreferHybrid ? ModelChoice::Hybrid : ModelChoice::Odn;
}

std::optional<double> dpp_crossover(const StepObservation& obs, const ControllerConfig& cfg) {
  // score(a) = V*P(a) + Q*slope(a); equal at Q* = V*(P_T - P_H) / (slope_H - slope_T).
  const double ph = performance(ModelChoice::Hybrid, obs.num_hybrid, obs.num_odn, cfg);
  const double pt = performance(ModelChoice::Odn, obs.num_hybrid, obs.num_odn, cfg);
  double sh = cfg.w1;
  double st = cfg.w2;
  if (cfg.rule == DppRule::ArrivalAware) {
    sh -= cfg.w_fps * obs.latency_hybrid;
    st -= cfg.w_fps * obs.latency_odn;
  }
  if (sh == st) return std::nullopt;
  const double q = cfg.V * (pt - ph) / (sh - st);
  if (!(q >= 0.0)) return std::nullopt;
  return q;
}

double lyapunov(double q) { return 0.5 * q * q; }

DriftReport drift_bound_check(std::span<const DriftSample> trajectory) {
  DriftReport report;
  report.steps = trajectory.size();
  bool first = true;
  for (std::size_t n = 0; n < trajectory.size(); ++n) {
    const auto& s = trajectory[n];
    const double next = queue_update(s.q, s.a, s.b);
    const double drift = lyapunov(next) - lyapunov(s.q);
    const double bound = 0.5 * (s.a * s.a + s.b * s.b) + s.q * (s.a - s.b);
    const double slack = bound - drift;
    if (first) {
      report.min_slack = report.max_slack = slack;
      first = false;
    } else {
      report.min_slack = std::min(report.min_slack, slack);
      report.max_slack = std::max(report.max_slack, slack);
    }
    const double scale = 1.0 + std::abs(lyapunov(next)) + std::abs(lyapunov(s.q)) + std::abs(bound);
    if (slack < -1e-9 * scale) report.violations.push_back(n);
  }
  return report;
}

std::size_t dpp_flops(DppRule rule, std::size_t n_actions) {
  if (n_actions == 0) return 0;
  const std::size_t per_action = rule == DppRule::ServiceOnly ? 3 : 5;
  return per_action * n_actions + (n_actions - 1);
}

}  // namespace controller

double ControllerState::advance(double a, double b) {
  q_ = controller::queue_update(q_, a, b);
  ++t_;
  return q_;
}

}  // namespace flowguard
