#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <vector>

#include "scenred/mip/problem.hpp"
#include "scenred/mip/simplex.hpp"

namespace scenred::mip {

namespace detail {

struct BnbNode {
  double bound = 0.0;
  std::int64_t id = 0;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> x;  // LP solution at this node
};

struct BnbNodeOrder {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

// Most fractional integral variable, ties to the lowest index; SIZE_MAX if
// x is integral within tol.
inline std::size_t branching_variable(const MipProblem& p, const std::vector<double>& x, double tol) {
  std::size_t best = SIZE_MAX;
  double best_dist = tol;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!p.integral[j]) continue;
    const double f = x[j] - std::floor(x[j]);
    const double dist = std::min(f, 1.0 - f);
    if (dist > best_dist) {
      best_dist = dist;
      best = j;
    }
  }
  return best;
}

// Branching choice at a fractional node. Unfixed variables of the highest
// positive priority are branched on first, even at integral values, so that
// fixing them can split the problem into blocks; otherwise the most
// fractional variable is used.
inline std::size_t choose_branch(const MipProblem& p, const std::vector<double>& x, const std::vector<double>& lo,
                                 const std::vector<double>& hi, double tol) {
  std::size_t best = SIZE_MAX;
  int best_pr = 0;
  double best_dist = -1.0;
  for (std::size_t j = 0; j < x.size() && !p.branch_priority.empty(); ++j) {
    if (!p.integral[j] || lo[j] == hi[j] || p.branch_priority[j] <= 0) continue;
    const double f = x[j] - std::floor(x[j]);
    const double dist = std::min(f, 1.0 - f);
    const int pr = p.branch_priority[j];
    if (pr > best_pr || (pr == best_pr && dist > best_dist)) {
      best_pr = pr;
      best_dist = dist;
      best = j;
    }
  }
  return best != SIZE_MAX ? best : branching_variable(p, x, tol);
}

inline void snap_integers(const MipProblem& p, std::vector<double>& x) {
  for (std::size_t j = 0; j < x.size(); ++j)
    if (p.integral[j]) x[j] = std::round(x[j]);
}

struct Block {
  std::vector<std::size_t> cols;
  std::vector<std::size_t> rows;
  bool has_integral = false;
};

// Groups the free columns (lo < hi) into blocks that share no row. Blocks are
// ordered by their first row; blocks without rows come last, by column.
inline std::vector<Block> free_blocks(const MipProblem& p, const std::vector<double>& lo,
                                      const std::vector<double>& hi) {
  const std::size_t n = p.num_vars();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  std::vector<std::size_t> row_anchor(p.num_rows(), SIZE_MAX);
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    const auto r = p.rows.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (r[j] == 0.0 || lo[j] == hi[j]) continue;
      if (row_anchor[i] == SIZE_MAX) {
        row_anchor[i] = j;
      } else {
        const std::size_t a = find(row_anchor[i]), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::size_t> block_of(n, SIZE_MAX);
  std::vector<Block> blocks;
  std::vector<std::size_t> first_row;
  auto block_for = [&](std::size_t root) {
    if (block_of[root] == SIZE_MAX) {
      block_of[root] = blocks.size();
      blocks.emplace_back();
      first_row.push_back(SIZE_MAX);
    }
    return block_of[root];
  };
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    if (row_anchor[i] == SIZE_MAX) continue;
    const std::size_t b = block_for(find(row_anchor[i]));
    blocks[b].rows.push_back(i);
    first_row[b] = std::min(first_row[b], i);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (lo[j] == hi[j]) continue;
    const std::size_t b = block_for(find(j));
    blocks[b].cols.push_back(j);
    if (p.integral[j]) blocks[b].has_integral = true;
  }
  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (first_row[a] != first_row[b]) return first_row[a] < first_row[b];
    return blocks[a].cols.front() < blocks[b].cols.front();
  });
  std::vector<Block> sorted;
  sorted.reserve(blocks.size());
  for (std::size_t b : order) sorted.push_back(std::move(blocks[b]));
  return sorted;
}

// Sub-problem over one block with every column outside it fixed at lo.
inline MipProblem restrict_to_block(const MipProblem& p, const Block& blk, const std::vector<double>& lo,
                                    const std::vector<double>& hi) {
  MipProblem s;
  const std::size_t nb = blk.cols.size();
  s.rows = Matrix(blk.rows.size(), nb);
  s.rhs.resize(blk.rows.size());
  s.sense.resize(blk.rows.size());
  for (std::size_t j : blk.cols) {
    s.objective.push_back(p.objective[j]);
    s.lower.push_back(lo[j]);
    s.upper.push_back(hi[j]);
    s.integral.push_back(p.integral[j]);
    if (!p.branch_priority.empty()) s.branch_priority.push_back(p.branch_priority[j]);
  }
  for (std::size_t r = 0; r < blk.rows.size(); ++r) {
    const auto row = p.rows.row(blk.rows[r]);
    double fixed = 0.0;
    for (std::size_t j = 0; j < p.num_vars(); ++j)
      if (lo[j] == hi[j] && row[j] != 0.0) fixed += row[j] * lo[j];
    for (std::size_t c = 0; c < nb; ++c) s.rows(r, c) = row[blk.cols[c]];
    s.rhs[r] = p.rhs[blk.rows[r]] - fixed;
    s.sense[r] = p.sense[blk.rows[r]];
  }
  return s;
}

inline SolveResult branch_and_bound(const MipProblem& p, const SolverOptions& opt);

}  // namespace detail

// Best-first branch and bound over LP relaxations. Every integral variable
// must have finite bounds. Node count = number of LP relaxations solved,
// including those of decomposed blocks.
inline SolveResult solve_mip(const MipProblem& p, const SolverOptions& opt = {}) {
  p.validate();
  bool any_integral = false;
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    if (!p.integral[j]) continue;
    any_integral = true;
    if (!std::isfinite(p.lower[j]) || !std::isfinite(p.upper[j]))
      throw std::invalid_argument("solve_mip: integral variable " + std::to_string(j) + " lacks finite bounds");
  }
  if (!any_integral) {
    auto r = solve_lp(p, opt.tol);
    if (r.status == Status::kOptimal && r.objective >= opt.cutoff) {
      r.status = Status::kInfeasible;
      r.x.clear();
      r.objective = kInf;
    }
    return r;
  }
  return detail::branch_and_bound(p, opt);
}

namespace detail {

inline SolveResult branch_and_bound(const MipProblem& p, const SolverOptions& opt) {
  SolveResult best;
  std::priority_queue<BnbNode, std::vector<BnbNode>, BnbNodeOrder> open;
  std::int64_t next_id = 0;
  WorkMetric work;
  bool hit_limit = false;

  // Nodes whose bound reaches this value cannot improve on the incumbent.
  auto limit = [&] { return std::min(opt.cutoff, best.has_solution() ? best.objective - opt.tol.gap : kInf); };
  auto accept = [&](std::vector<double> x) {
    const double obj = dot(p.objective, x);
    if (obj >= limit()) return;
    best.x = std::move(x);
    best.objective = obj;
  };

  // Solves the node LP and either records an incumbent or enqueues it.
  // Returns false if the relaxation is unbounded.
  auto process = [&](std::vector<double> lo, std::vector<double> hi) -> bool {
    auto lp = solve_lp_with_bounds(p, lo, hi, opt.tol);
    work.simplex_pivots += lp.pivots;
    work.bnb_nodes += 1;
    if (lp.status == Status::kUnbounded) return false;
    if (lp.status != Status::kOptimal) return true;
    if (lp.objective >= limit()) return true;
    if (branching_variable(p, lp.x, opt.tol.integrality) == SIZE_MAX) {
      snap_integers(p, lp.x);
      accept(std::move(lp.x));
      return true;
    }
    open.push({lp.objective, next_id++, std::move(lo), std::move(hi), std::move(lp.x)});
    return true;
  };

  // Solves the blocks of a node one after another. Each block only searches
  // below what the incumbent leaves after the fixed part, the blocks already
  // solved, and the LP bounds of the blocks still to come.
  auto solve_blocks = [&](const BnbNode& node, const std::vector<Block>& blocks) {
    double fixed = 0.0;
    for (std::size_t j = 0; j < p.num_vars(); ++j)
      if (node.lo[j] == node.hi[j]) fixed += p.objective[j] * node.lo[j];
    std::vector<double> lp_part(blocks.size(), 0.0);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (std::size_t j : blocks[b].cols) lp_part[b] += p.objective[j] * node.x[j];
    std::vector<double> x = node.lo;
    double total = fixed;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      double rest = 0.0;
      for (std::size_t l = b + 1; l < blocks.size(); ++l) rest += lp_part[l];
      SolverOptions sub = opt;
      sub.node_limit = std::max<std::int64_t>(1, opt.node_limit - work.bnb_nodes);
      sub.tol.gap = opt.tol.gap / static_cast<double>(blocks.size());
      sub.cutoff = limit() - total - rest;
      const auto r = solve_mip(restrict_to_block(p, blocks[b], node.lo, node.hi), sub);
      work += r.work;
      if (r.status == Status::kNodeLimit) {
        hit_limit = true;
        return;
      }
      if (r.status != Status::kOptimal) return;
      total += r.objective;
      for (std::size_t c = 0; c < blocks[b].cols.size(); ++c) x[blocks[b].cols[c]] = r.x[c];
    }
    accept(std::move(x));
  };

  if (!process(p.lower, p.upper)) {
    best.status = Status::kUnbounded;
    best.objective = -kInf;
    best.work = work;
    return best;
  }

  while (!open.empty() && !hit_limit) {
    if (open.top().bound >= limit()) break;
    if (work.bnb_nodes >= opt.node_limit) {
      hit_limit = true;
      break;
    }
    BnbNode node = open.top();
    open.pop();

    if (opt.decompose) {
      auto blocks = free_blocks(p, node.lo, node.hi);
      const auto integral_blocks =
          std::count_if(blocks.begin(), blocks.end(), [](const Block& b) { return b.has_integral; });
      if (integral_blocks >= 2) {
        solve_blocks(node, blocks);
        continue;
      }
    }

    const std::size_t j = choose_branch(p, node.x, node.lo, node.hi, opt.tol.integrality);
    double split = std::floor(node.x[j]);
    if (std::abs(node.x[j] - std::round(node.x[j])) <= opt.tol.integrality) {
      split = std::round(node.x[j]);
      if (split >= node.hi[j]) split -= 1.0;
    }
    std::vector<double> down_lo = node.lo;
    std::vector<double> down_hi = node.hi;
    down_hi[j] = split;
    std::vector<double> up_lo = std::move(node.lo);
    std::vector<double> up_hi = std::move(node.hi);
    up_lo[j] = split + 1.0;
    // Children of a bounded relaxation are bounded.
    process(std::move(down_lo), std::move(down_hi));
    process(std::move(up_lo), std::move(up_hi));
  }
  best.work = work;
  if (hit_limit) {
    best.status = Status::kNodeLimit;
  } else {
    best.status = best.has_solution() ? Status::kOptimal : Status::kInfeasible;
  }
  return best;
}

}  // namespace detail

}  // namespace scenred::mip
