#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "scenred/mip/problem.hpp"

namespace scenred::mip {

namespace detail {

struct LpOutcome {
  Status status = Status::kInfeasible;
  std::vector<double> x;
  double objective = kInf;
  std::int64_t pivots = 0;
};

// Two-phase primal simplex on a dense tableau. Variable bounds are handled
// implicitly (nonbasic at lower or upper); Bland's rule picks the entering
// column (lowest index) and breaks ratio ties by lowest basic index, which
// guarantees termination. Column order therefore follows the caller's
// variable order, and row order follows the caller's constraint order.
class BoundedSimplex {
 public:
  BoundedSimplex(const MipProblem& p, std::span<const double> lo, std::span<const double> hi, const Tolerances& tol)
      : p_(p), tol_(tol) {
    build(lo, hi);
  }

  LpOutcome run() {
    LpOutcome out;
    if (trivially_infeasible_) return out;

    if (num_artificial_ > 0) {
      price_phase(/*phase1=*/true);
      const Status s1 = iterate(out.pivots);
      if (s1 == Status::kUnbounded) throw std::runtime_error("simplex: phase 1 reported unbounded");
      double infeas = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (basis_[i] >= first_art_) infeas += std::max(0.0, beta_[i]);
      if (infeas > tol_.feasibility) {
        out.status = Status::kInfeasible;
        return out;
      }
      for (std::size_t j = first_art_; j < width_; ++j) ub_[j] = 0.0;
    }
    price_phase(/*phase1=*/false);
    const Status s2 = iterate(out.pivots);
    if (s2 == Status::kUnbounded) {
      out.status = Status::kUnbounded;
      return out;
    }
    out.status = Status::kOptimal;
    out.x = recover();
    out.objective = dot(p_.objective, out.x);
    return out;
  }

 private:
  enum : std::uint8_t { kBasic = 0, kAtLower = 1, kAtUpper = 2 };

  struct ColumnMap {
    std::size_t col = 0;
    std::size_t neg_col = SIZE_MAX;  // second column for free variables
    double shift = 0.0;
    double sign = 1.0;
  };

  void build(std::span<const double> lo, std::span<const double> hi) {
    const std::size_t n = p_.num_vars();
    m_ = p_.num_rows();
    map_.resize(n);
    std::vector<double> col_ub;
    std::vector<double> col_cost;
    std::size_t ncols = 0;
    for (std::size_t j = 0; j < n; ++j) {
      ColumnMap& cm = map_[j];
      if (lo[j] > hi[j] + tol_.feasibility) trivially_infeasible_ = true;
      if (std::isfinite(lo[j])) {
        cm = {ncols++, SIZE_MAX, lo[j], 1.0};
        col_ub.push_back(std::max(0.0, hi[j] - lo[j]));
        col_cost.push_back(p_.objective[j]);
      } else if (std::isfinite(hi[j])) {
        cm = {ncols++, SIZE_MAX, hi[j], -1.0};
        col_ub.push_back(kInf);
        col_cost.push_back(-p_.objective[j]);
      } else {
        cm = {ncols, ncols + 1, 0.0, 1.0};
        ncols += 2;
        col_ub.insert(col_ub.end(), {kInf, kInf});
        col_cost.insert(col_cost.end(), {p_.objective[j], -p_.objective[j]});
      }
    }
    num_struct_ = ncols;

    // Row data in shifted space, sign-normalized so that rhs >= 0.
    std::vector<double> rhs(m_);
    std::vector<double> slack_coef(m_, 0.0);
    std::vector<char> needs_art(m_, 0);
    std::size_t num_slack = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      double r = p_.rhs[i];
      const auto row = p_.rows.row(i);
      for (std::size_t j = 0; j < n; ++j)
        if (row[j] != 0.0) r -= row[j] * map_[j].shift;
      rhs[i] = r;
      if (p_.sense[i] == Sense::kLe) slack_coef[i] = 1.0;
      if (p_.sense[i] == Sense::kGe) slack_coef[i] = -1.0;
      if (p_.sense[i] != Sense::kEq) ++num_slack;
    }
    std::vector<double> row_sign(m_, 1.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (rhs[i] < 0.0) row_sign[i] = -1.0;
      const double eff_slack = row_sign[i] * slack_coef[i];
      if (eff_slack <= 0.0) needs_art[i] = 1;
    }
    num_artificial_ = static_cast<std::size_t>(std::count(needs_art.begin(), needs_art.end(), 1));
    first_slack_ = num_struct_;
    first_art_ = num_struct_ + num_slack;
    width_ = first_art_ + num_artificial_;

    tab_.assign(m_ * width_, 0.0);
    beta_.assign(m_, 0.0);
    basis_.assign(m_, 0);
    ub_.assign(width_, kInf);
    cost_.assign(width_, 0.0);
    status_.assign(width_, kAtLower);
    for (std::size_t c = 0; c < num_struct_; ++c) {
      ub_[c] = col_ub[c];
      cost_[c] = col_cost[c];
    }

    std::size_t slack = first_slack_;
    std::size_t art = first_art_;
    for (std::size_t i = 0; i < m_; ++i) {
      double* t = &tab_[i * width_];
      const auto row = p_.rows.row(i);
      const double s = row_sign[i];
      for (std::size_t j = 0; j < n; ++j) {
        const double a = row[j];
        if (a == 0.0) continue;
        const ColumnMap& cm = map_[j];
        t[cm.col] += s * a * cm.sign;
        if (cm.neg_col != SIZE_MAX) t[cm.neg_col] -= s * a;
      }
      beta_[i] = s * rhs[i];
      std::size_t slack_col = SIZE_MAX;
      if (p_.sense[i] != Sense::kEq) {
        slack_col = slack++;
        t[slack_col] = s * slack_coef[i];
      }
      if (needs_art[i]) {
        t[art] = 1.0;
        basis_[i] = art++;
      } else {
        basis_[i] = slack_col;
      }
      status_[basis_[i]] = kBasic;
    }
  }

  void price_phase(bool phase1) {
    std::vector<double> c(width_, 0.0);
    if (phase1) {
      for (std::size_t j = first_art_; j < width_; ++j) c[j] = 1.0;
    } else {
      c = cost_;
    }
    d_ = c;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      const double* t = &tab_[i * width_];
      for (std::size_t j = 0; j < width_; ++j) d_[j] -= cb * t[j];
    }
  }

  Status iterate(std::int64_t& pivots) {
    const std::int64_t limit = 200 * static_cast<std::int64_t>(m_ + width_) + 10000;
    for (std::int64_t it = 0;; ++it) {
      if (it > limit) throw std::runtime_error("simplex: iteration limit exceeded");
      // Bland: first improving column.
      std::size_t enter = SIZE_MAX;
      for (std::size_t j = 0; j < width_; ++j) {
        if (status_[j] == kBasic || ub_[j] <= 0.0) continue;
        if ((status_[j] == kAtLower && d_[j] < -tol_.reduced_cost) ||
            (status_[j] == kAtUpper && d_[j] > tol_.reduced_cost)) {
          enter = j;
          break;
        }
      }
      if (enter == SIZE_MAX) return Status::kOptimal;

      const double dir = status_[enter] == kAtLower ? 1.0 : -1.0;
      double theta = kInf;
      std::size_t leave_row = SIZE_MAX;
      bool leave_to_upper = false;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = dir * tab_[i * width_ + enter];
        double ratio;
        bool to_upper;
        if (alpha > tol_.pivot) {
          ratio = std::max(0.0, beta_[i]) / alpha;
          to_upper = false;
        } else if (alpha < -tol_.pivot && std::isfinite(ub_[basis_[i]])) {
          ratio = std::max(0.0, ub_[basis_[i]] - beta_[i]) / -alpha;
          to_upper = true;
        } else {
          continue;
        }
        if (ratio < theta - 1e-12 ||
            (ratio <= theta + 1e-12 && leave_row != SIZE_MAX && basis_[i] < basis_[leave_row])) {
          theta = ratio;
          leave_row = i;
          leave_to_upper = to_upper;
        }
      }
      ++pivots;
      const double own = ub_[enter];
      if (own < theta - 1e-12) {
        // Bound flip: entering variable travels to its opposite bound.
        for (std::size_t i = 0; i < m_; ++i) beta_[i] -= dir * own * tab_[i * width_ + enter];
        status_[enter] = status_[enter] == kAtLower ? kAtUpper : kAtLower;
        continue;
      }
      if (leave_row == SIZE_MAX) return Status::kUnbounded;

      for (std::size_t i = 0; i < m_; ++i) beta_[i] -= dir * theta * tab_[i * width_ + enter];
      const double entering_value = status_[enter] == kAtLower ? theta : own - theta;
      const std::size_t leaving = basis_[leave_row];
      status_[leaving] = leave_to_upper ? kAtUpper : kAtLower;
      status_[enter] = kBasic;
      basis_[leave_row] = enter;
      beta_[leave_row] = entering_value;
      pivot(leave_row, enter);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    double* pr = &tab_[r * width_];
    const double inv = 1.0 / pr[c];
    for (std::size_t j = 0; j < width_; ++j) pr[j] *= inv;
    pr[c] = 1.0;
    // EF tableaus stay block sparse; update only the pivot row's nonzeros.
    nz_.clear();
    for (std::size_t j = 0; j < width_; ++j)
      if (pr[j] != 0.0 && j != c) nz_.push_back(j);
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* pi = &tab_[i * width_];
      const double f = pi[c];
      if (f == 0.0) continue;
      for (std::size_t j : nz_) pi[j] -= f * pr[j];
      pi[c] = 0.0;
    }
    const double f = d_[c];
    if (f != 0.0) {
      for (std::size_t j : nz_) d_[j] -= f * pr[j];
      d_[c] = 0.0;
    }
  }

  std::vector<double> recover() const {
    std::vector<double> xs(width_, 0.0);
    for (std::size_t j = 0; j < width_; ++j)
      if (status_[j] == kAtUpper) xs[j] = ub_[j];
    for (std::size_t i = 0; i < m_; ++i) xs[basis_[i]] = beta_[i];
    std::vector<double> x(map_.size());
    for (std::size_t j = 0; j < map_.size(); ++j) {
      const ColumnMap& cm = map_[j];
      x[j] = cm.shift + cm.sign * xs[cm.col];
      if (cm.neg_col != SIZE_MAX) x[j] -= xs[cm.neg_col];
    }
    return x;
  }

  const MipProblem& p_;
  Tolerances tol_;
  bool trivially_infeasible_ = false;
  std::size_t m_ = 0;
  std::size_t num_struct_ = 0;
  std::size_t num_artificial_ = 0;
  std::size_t first_slack_ = 0;
  std::size_t first_art_ = 0;
  std::size_t width_ = 0;
  std::vector<ColumnMap> map_;
  std::vector<double> tab_;
  std::vector<double> beta_;
  std::vector<std::size_t> basis_;
  std::vector<double> ub_;
  std::vector<double> cost_;
  std::vector<double> d_;
  std::vector<std::uint8_t> status_;
  std::vector<std::size_t> nz_;
};

inline LpOutcome solve_lp_with_bounds(const MipProblem& p, std::span<const double> lo, std::span<const double> hi,
                                      const Tolerances& tol) {
  return BoundedSimplex(p, lo, hi, tol).run();
}

}  // namespace detail

// Solves the LP relaxation (integrality ignored).
inline SolveResult solve_lp(const MipProblem& p, const Tolerances& tol = {}) {
  p.validate();
  auto lp = detail::solve_lp_with_bounds(p, p.lower, p.upper, tol);
  SolveResult r;
  r.status = lp.status;
  r.work.simplex_pivots = lp.pivots;
  if (lp.status == Status::kOptimal) {
    r.x = std::move(lp.x);
    r.objective = lp.objective;
  } else if (lp.status == Status::kUnbounded) {
    r.objective = -kInf;
  }
  return r;
}

}  // namespace scenred::mip
