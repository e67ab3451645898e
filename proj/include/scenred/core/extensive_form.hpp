#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "scenred/core/types.hpp"
#include "scenred/mip/problem.hpp"

namespace scenred {

namespace detail {
inline void append_var_domain(mip::MipProblem& p, VarKind kind, VarBounds bd) {
  if (kind == VarKind::kBinary) {
    bd.lo = std::max(bd.lo, 0.0);
    bd.hi = std::min(bd.hi, 1.0);
  }
  p.lower.push_back(bd.lo);
  p.upper.push_back(bd.hi);
  p.integral.push_back(is_integral(kind) ? 1 : 0);
}
}  // namespace detail

// Monolithic mixed-integer program: first-stage x followed by one y block per
// included scenario, in selection order. Rows are A x <= b, then one
// W_i y_i + T_i x <= h_i block per scenario, also in selection order.
inline mip::MipProblem build_extensive_form(const SpInstance& inst,
                                            const std::optional<ReducedSelection>& sel = std::nullopt) {
  validate(inst);
  std::vector<std::size_t> order;
  std::vector<double> weights;
  if (sel) {
    validate(*sel, inst.num_scenarios());
    order = sel->indices;
    weights = sel->weights;
  } else {
    for (std::size_t i = 0; i < inst.num_scenarios(); ++i) {
      order.push_back(i);
      weights.push_back(inst.scenarios[i].prob);
    }
  }

  const FirstStage& fs = inst.first_stage;
  const std::size_t n1 = inst.n1(), n2 = inst.n2(), m1 = inst.m1(), m2 = inst.m2();
  const std::size_t k = order.size();
  const std::size_t n = n1 + k * n2;
  const std::size_t m = m1 + k * m2;

  mip::MipProblem p;
  p.objective.reserve(n);
  p.lower.reserve(n);
  p.upper.reserve(n);
  p.integral.reserve(n);
  p.objective.insert(p.objective.end(), fs.c.begin(), fs.c.end());
  for (std::size_t j = 0; j < n1; ++j) detail::append_var_domain(p, fs.kinds[j], fs.bounds[j]);
  for (std::size_t s = 0; s < k; ++s) {
    const Scenario& sc = inst.scenarios[order[s]];
    for (std::size_t j = 0; j < n2; ++j) {
      p.objective.push_back(weights[s] * sc.q[j]);
      detail::append_var_domain(p, sc.y_kinds[j], sc.y_bounds[j]);
    }
  }

  // First-stage columns are branched on first; once they are fixed the
  // scenario blocks separate.
  p.branch_priority.assign(n, 0);
  std::fill(p.branch_priority.begin(), p.branch_priority.begin() + static_cast<std::ptrdiff_t>(n1), 1);

  p.rows = Matrix(m, n);
  p.rhs.assign(m, 0.0);
  p.sense.assign(m, mip::Sense::kLe);
  for (std::size_t i = 0; i < m1; ++i) {
    for (std::size_t j = 0; j < n1; ++j) p.rows(i, j) = fs.A(i, j);
    p.rhs[i] = fs.b[i];
  }
  for (std::size_t s = 0; s < k; ++s) {
    const Scenario& sc = inst.scenarios[order[s]];
    const std::size_t r0 = m1 + s * m2;
    const std::size_t c0 = n1 + s * n2;
    for (std::size_t i = 0; i < m2; ++i) {
      auto row = p.rows.row(r0 + i);
      for (std::size_t j = 0; j < n1; ++j) row[j] = sc.T(i, j);
      for (std::size_t j = 0; j < n2; ++j) row[c0 + j] = sc.W(i, j);
      p.rhs[r0 + i] = sc.h[i];
    }
  }
  return p;
}

// Second-stage program of one scenario with x fixed: min q^T y  s.t.  W y <= h - T x.
inline mip::MipProblem build_recourse_problem(const Scenario& sc, const std::vector<double>& x) {
  const std::size_t n2 = sc.num_vars(), m2 = sc.num_rows();
  mip::MipProblem p;
  p.objective = sc.q;
  for (std::size_t j = 0; j < n2; ++j) detail::append_var_domain(p, sc.y_kinds[j], sc.y_bounds[j]);
  p.rows = sc.W;
  p.rhs.resize(m2);
  p.sense.assign(m2, mip::Sense::kLe);
  for (std::size_t i = 0; i < m2; ++i) {
    double tx = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) tx += sc.T(i, j) * x[j];
    p.rhs[i] = sc.h[i] - tx;
  }
  return p;
}

}  // namespace scenred
