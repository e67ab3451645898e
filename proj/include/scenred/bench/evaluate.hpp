#pragma once

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/core/evaluate.hpp"
#include "scenred/core/extensive_form.hpp"
#include "scenred/core/types.hpp"
#include "scenred/mip/branch_and_bound.hpp"

namespace scenred::bench {

struct EvalReport {
  std::size_t instance_id = 0;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double error_pct = 0.0;
  double reduced_objective = 0.0;
  double full_f = 0.0;
  double v_star = 0.0;
  mip::WorkMetric work;
  double wall_seconds = 0.0;
  std::vector<std::size_t> indices;
  // Empty on success; otherwise the reason no x~ could be scored.
  std::string error;

  bool ok() const { return error.empty(); }
};

inline double error_pct(double full_f, double v_star) {
  if (v_star == 0.0) throw std::invalid_argument("error_pct: v* is zero");
  return 100.0 * (full_f - v_star) / std::abs(v_star);
}

struct EvalOptions {
  mip::SolverOptions solver;
  // Wall-clock timing is off by default so reports stay reproducible.
  bool record_wall_time = false;
};

// Solves the reduced problem in the order of sel and scores its first-stage
// decision on the full scenario set.
inline EvalReport evaluate_selection(const SpInstance& inst, const ReducedSelection& sel, const EvalOptions& opt = {}) {
  if (!inst.cached_optimum) throw std::invalid_argument("evaluate_selection: instance has no cached optimum");
  validate(sel, inst.num_scenarios());
  EvalReport rep;
  rep.k = sel.size();
  rep.indices = sel.indices;
  rep.v_star = inst.cached_optimum->value;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = mip::solve_mip(build_extensive_form(inst, sel), opt.solver);
  if (opt.record_wall_time)
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.work = r.work;
  if (!r.has_solution()) {
    rep.error = std::string("reduced problem: ") + mip::to_string(r.status);
    return rep;
  }
  rep.reduced_objective = r.objective;
  const std::vector<double> x(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(inst.n1()));
  try {
    rep.full_f = evaluate_first_stage(inst, x, opt.solver).f;
  } catch (const std::exception& e) {
    rep.error = std::string("full evaluation: ") + e.what();
    return rep;
  }
  rep.error_pct = error_pct(rep.full_f, rep.v_star);
  return rep;
}

}  // namespace scenred::bench
