#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/core/extensive_form.hpp"
#include "scenred/core/types.hpp"
#include "scenred/mip/branch_and_bound.hpp"

namespace scenred {

class ScenarioInfeasible : public std::runtime_error {
 public:
  explicit ScenarioInfeasible(std::size_t index, const std::string& what)
      : std::runtime_error("scenario " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

struct FirstStageValue {
  double f = 0.0;
  std::vector<double> per_scenario_q;
  mip::WorkMetric work;
};

// Throws std::invalid_argument unless x satisfies A x <= b, bounds and kinds.
inline void check_first_stage_feasible(const FirstStage& fs, const std::vector<double>& x, double tol = 1e-6) {
  if (x.size() != fs.num_vars())
    throw std::invalid_argument("first-stage vector has length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(fs.num_vars()));
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < fs.bounds[j].lo - tol || x[j] > fs.bounds[j].hi + tol)
      throw std::invalid_argument("first-stage variable " + std::to_string(j) + " violates its bounds");
    if (is_integral(fs.kinds[j]) && std::abs(x[j] - std::round(x[j])) > tol)
      throw std::invalid_argument("first-stage variable " + std::to_string(j) + " is not integral");
  }
  for (std::size_t i = 0; i < fs.num_rows(); ++i) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) lhs += fs.A(i, j) * x[j];
    if (lhs > fs.b[i] + tol) throw std::invalid_argument("first-stage row " + std::to_string(i) + " is violated");
  }
}

// Q(x, xi) for one scenario. Throws ScenarioInfeasible if the recourse
// program has no solution or the node limit leaves it unproven.
inline double recourse_value(const Scenario& sc, std::size_t index, const std::vector<double>& x,
                             const mip::SolverOptions& solver, mip::WorkMetric* work = nullptr) {
  const auto r = mip::solve_mip(build_recourse_problem(sc, x), solver);
  if (work) *work += r.work;
  if (r.status == mip::Status::kInfeasible) throw ScenarioInfeasible(index, "second stage infeasible");
  if (r.status == mip::Status::kUnbounded) throw ScenarioInfeasible(index, "second stage unbounded");
  if (r.status == mip::Status::kNodeLimit) throw ScenarioInfeasible(index, "second stage hit the node limit");
  return r.objective;
}

// f(x) = c^T x + sum_i p_i Q(x, xi_i).
inline FirstStageValue evaluate_first_stage(const SpInstance& inst, const std::vector<double>& x,
                                            const mip::SolverOptions& solver = {}) {
  check_first_stage_feasible(inst.first_stage, x);
  FirstStageValue out;
  out.per_scenario_q.resize(inst.num_scenarios());
  double expected = 0.0;
  for (std::size_t i = 0; i < inst.num_scenarios(); ++i) {
    const double q = recourse_value(inst.scenarios[i], i, x, solver, &out.work);
    out.per_scenario_q[i] = q;
    expected += inst.scenarios[i].prob * q;
  }
  out.f = mip::dot(inst.first_stage.c, x) + expected;
  return out;
}

struct ExactSolveOptions {
  // Pure-binary first stages up to this size are solved by enumerating x
  // and evaluating each scenario separately; larger ones use the
  // monolithic extensive form.
  std::size_t max_enumerated_vars = 16;
};

struct ExactSolveResult {
  mip::Status status = mip::Status::kInfeasible;
  Optimum optimum;
  mip::WorkMetric work;
};

namespace detail {

inline bool enumerable_first_stage(const FirstStage& fs, std::size_t limit) {
  if (fs.num_vars() == 0 || fs.num_vars() > limit) return false;
  return std::all_of(fs.kinds.begin(), fs.kinds.end(), [](VarKind k) { return k == VarKind::kBinary; });
}

// Enumerates binary first-stage points in order of an LP-relaxation lower
// bound and stops once no remaining point can beat the incumbent.
inline ExactSolveResult solve_by_enumeration(const SpInstance& inst, const mip::SolverOptions& solver) {
  const FirstStage& fs = inst.first_stage;
  const std::size_t n1 = fs.num_vars();
  struct Candidate {
    double bound;
    std::uint64_t mask;
    std::vector<double> x;
  };
  std::vector<Candidate> cands;
  ExactSolveResult out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n1); ++mask) {
    std::vector<double> x(n1);
    bool ok = true;
    for (std::size_t j = 0; j < n1; ++j) {
      x[j] = (mask >> j) & 1U ? 1.0 : 0.0;
      if (x[j] < fs.bounds[j].lo || x[j] > fs.bounds[j].hi) ok = false;
    }
    if (!ok) continue;
    for (std::size_t i = 0; i < fs.num_rows() && ok; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n1; ++j) lhs += fs.A(i, j) * x[j];
      if (lhs > fs.b[i] + 1e-9) ok = false;
    }
    if (!ok) continue;
    double bound = mip::dot(fs.c, x);
    for (const Scenario& sc : inst.scenarios) {
      const auto lp = mip::solve_lp(build_recourse_problem(sc, x), solver.tol);
      out.work += lp.work;
      if (lp.status != mip::Status::kOptimal) {
        ok = false;
        break;
      }
      bound += sc.prob * lp.objective;
    }
    if (ok) cands.push_back({bound, mask, std::move(x)});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return a.bound != b.bound ? a.bound < b.bound : a.mask < b.mask;
  });

  double best = kInfinity;
  for (const Candidate& cand : cands) {
    if (cand.bound >= best) break;
    double f = mip::dot(fs.c, cand.x);
    bool feasible = true;
    for (std::size_t i = 0; i < inst.num_scenarios(); ++i) {
      const auto r = mip::solve_mip(build_recourse_problem(inst.scenarios[i], cand.x), solver);
      out.work += r.work;
      if (r.status == mip::Status::kNodeLimit) {
        out.status = mip::Status::kNodeLimit;
        return out;
      }
      if (r.status != mip::Status::kOptimal) {
        feasible = false;
        break;
      }
      f += inst.scenarios[i].prob * r.objective;
    }
    if (feasible && f < best) {
      best = f;
      out.optimum = {f, cand.x};
      out.status = mip::Status::kOptimal;
    }
  }
  return out;
}

}  // namespace detail

// Exact optimum (v*, x*) of the full instance with the internal solver.
inline ExactSolveResult solve_instance_exact(const SpInstance& inst, const mip::SolverOptions& solver = {},
                                             const ExactSolveOptions& opt = {}) {
  validate(inst);
  if (detail::enumerable_first_stage(inst.first_stage, opt.max_enumerated_vars))
    return detail::solve_by_enumeration(inst, solver);
  ExactSolveResult out;
  const auto r = mip::solve_mip(build_extensive_form(inst), solver);
  out.status = r.status;
  out.work = r.work;
  if (r.status == mip::Status::kOptimal) {
    out.optimum.value = r.objective;
    out.optimum.x.assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(inst.n1()));
  }
  return out;
}

}  // namespace scenred
