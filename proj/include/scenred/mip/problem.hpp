#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/matrix.hpp"

namespace scenred::mip {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense : std::uint8_t { kLe, kEq, kGe };

// min objective^T x  s.t.  rows x (sense) rhs,  lower <= x <= upper,
// x_j integral where integral[j] != 0.
struct MipProblem {
  std::vector<double> objective;
  Matrix rows;
  std::vector<double> rhs;
  std::vector<Sense> sense;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<char> integral;
  // Optional; higher-priority fractional variables are branched on first.
  std::vector<int> branch_priority;

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_rows() const { return rhs.size(); }

  void validate() const {
    const std::size_t n = objective.size();
    const std::size_t m = rhs.size();
    if (rows.rows() != m || (m > 0 && rows.cols() != n))
      throw std::invalid_argument("MipProblem: constraint matrix is " + rows.shape_string() + ", expected " +
                                  std::to_string(m) + "x" + std::to_string(n));
    if (sense.size() != m) throw std::invalid_argument("MipProblem: sense size mismatch");
    if (lower.size() != n || upper.size() != n || integral.size() != n)
      throw std::invalid_argument("MipProblem: bound/integrality size mismatch");
    if (!branch_priority.empty() && branch_priority.size() != n)
      throw std::invalid_argument("MipProblem: branch priority size mismatch");
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
        throw std::invalid_argument("MipProblem: invalid bounds on variable " + std::to_string(j));
    }
  }
};

enum class Status : std::uint8_t { kOptimal, kInfeasible, kUnbounded, kNodeLimit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "Optimal";
    case Status::kInfeasible: return "Infeasible";
    case Status::kUnbounded: return "Unbounded";
    case Status::kNodeLimit: return "NodeLimit";
  }
  return "?";
}

// Deterministic solver effort; stands in for wall-clock solve time.
struct WorkMetric {
  std::int64_t simplex_pivots = 0;
  std::int64_t bnb_nodes = 0;

  WorkMetric& operator+=(const WorkMetric& o) {
    simplex_pivots += o.simplex_pivots;
    bnb_nodes += o.bnb_nodes;
    return *this;
  }
  double time_units(double node_weight) const {
    return static_cast<double>(simplex_pivots) + node_weight * static_cast<double>(bnb_nodes);
  }
  friend bool operator==(const WorkMetric&, const WorkMetric&) = default;
};

struct SolveResult {
  Status status = Status::kInfeasible;
  std::vector<double> x;  // empty when no (incumbent) solution exists
  double objective = kInf;
  WorkMetric work;

  bool has_solution() const { return !x.empty(); }
};

struct Tolerances {
  double feasibility = 1e-6;
  double integrality = 1e-6;
  double gap = 1e-6;  // absolute branch-and-bound gap
  double pivot = 1e-9;
  double reduced_cost = 1e-9;
};

struct SolverOptions {
  std::int64_t node_limit = 200000;
  Tolerances tol;
  // Only solutions with objective below the cutoff are sought; Infeasible is
  // reported when none exists.
  double cutoff = kInf;
  // Split a node into independent blocks once its free columns no longer
  // share rows, and solve each block on its own.
  bool decompose = true;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Largest violation of rows, bounds, and (optionally) integrality at x.
inline double max_violation(const MipProblem& p, const std::vector<double>& x, bool check_integrality) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    double lhs = 0.0;
    const auto r = p.rows.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) lhs += r[j] * x[j];
    double v = 0.0;
    switch (p.sense[i]) {
      case Sense::kLe: v = lhs - p.rhs[i]; break;
      case Sense::kGe: v = p.rhs[i] - lhs; break;
      case Sense::kEq: v = std::abs(lhs - p.rhs[i]); break;
    }
    worst = std::max(worst, v);
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    worst = std::max({worst, p.lower[j] - x[j], x[j] - p.upper[j]});
    if (check_integrality && p.integral[j]) worst = std::max(worst, std::abs(x[j] - std::round(x[j])));
  }
  return worst;
}

}  // namespace scenred::mip
