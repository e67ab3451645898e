#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/core/extensive_form.hpp"
#include "scenred/core/types.hpp"
#include "scenred/mip/branch_and_bound.hpp"

namespace scenred::rl {

struct RewardConfig {
  double alpha = 0.001;
  double node_weight = 1.0;
  double time_scale = 1.0;
  // Reward when the reduced problem yields no first-stage solution.
  double failure_reward = -1e6;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("RewardConfig: alpha must lie in (0, 1)");
    if (!(node_weight >= 0.0)) throw std::invalid_argument("RewardConfig: node weight must be nonnegative");
    if (!(time_scale > 0.0)) throw std::invalid_argument("RewardConfig: time scale must be positive");
  }
  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

// M = -sum |x~_i - x*_i|
inline double compute_match(const std::vector<double>& x_tilde, const std::vector<double>& x_star) {
  if (x_tilde.size() != x_star.size())
    throw std::invalid_argument("compute_match: lengths " + std::to_string(x_tilde.size()) + " and " +
                                std::to_string(x_star.size()) + " differ");
  double m = 0.0;
  for (std::size_t i = 0; i < x_tilde.size(); ++i) m -= std::abs(x_tilde[i] - x_star[i]);
  return m;
}

inline double time_units(const mip::WorkMetric& w, const RewardConfig& cfg) {
  return w.time_units(cfg.node_weight) / cfg.time_scale;
}

// r = -(1 - alpha) t + alpha M
inline double compute_reward(double t, double match, const RewardConfig& cfg) {
  return -(1.0 - cfg.alpha) * t + cfg.alpha * match;
}

inline double compute_reward(const mip::WorkMetric& w, double match, const RewardConfig& cfg) {
  return compute_reward(time_units(w, cfg), match, cfg);
}

struct EnvDiagnostics {
  mip::Status status = mip::Status::kInfeasible;
  bool node_limited = false;
  bool has_solution = false;
  std::vector<double> x_tilde;
  mip::WorkMetric work;
  double reduced_objective = 0.0;
  double match = 0.0;
  double time = 0.0;
};

struct EnvResult {
  double reward = 0.0;
  EnvDiagnostics diag;
};

// Solves the reduced extensive form built from the ordered actions (uniform
// weights) and scores its first-stage decision against the cached optimum.
inline EnvResult env_step(const SpInstance& inst, const std::vector<std::size_t>& actions, const RewardConfig& cfg,
                          const mip::SolverOptions& solver = {}) {
  if (!inst.cached_optimum) throw std::invalid_argument("env_step: instance has no cached optimum");
  const auto sel = ReducedSelection::uniform(actions);
  const auto r = mip::solve_mip(build_extensive_form(inst, sel), solver);
  EnvResult out;
  EnvDiagnostics& d = out.diag;
  d.status = r.status;
  d.node_limited = r.status == mip::Status::kNodeLimit;
  d.has_solution = r.has_solution();
  d.work = r.work;
  d.time = time_units(r.work, cfg);
  if (!d.has_solution) {
    out.reward = cfg.failure_reward;
    return out;
  }
  d.x_tilde.assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(inst.n1()));
  d.reduced_objective = r.objective;
  d.match = compute_match(d.x_tilde, inst.cached_optimum->x);
  out.reward = compute_reward(d.time, d.match, cfg);
  return out;
}

}  // namespace scenred::rl
