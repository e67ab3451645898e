#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/core/evaluate.hpp"
#include "scenred/core/extensive_form.hpp"
#include "scenred/core/types.hpp"
#include "scenred/graphs/graph.hpp"
#include "scenred/matrix.hpp"
#include "scenred/parallel.hpp"
#include "scenred/rng.hpp"

namespace scenred::bench {

inline void check_k(std::size_t n, std::size_t k, const char* where) {
  if (k < 1 || k > n)
    throw std::invalid_argument(std::string(where) + ": k=" + std::to_string(k) + " must lie in [1, " +
                                std::to_string(n) + "]");
}

inline ReducedSelection baseline_random(std::size_t n, std::size_t k, std::uint64_t seed) {
  check_k(n, k, "baseline_random");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  // partial Fisher-Yates; the first k draws are the selection in draw order
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  return ReducedSelection::uniform(std::move(idx));
}

// Sum over points of the distance to the nearest medoid.
inline double medoid_cost(const Matrix& d, const std::vector<std::size_t>& medoids) {
  double total = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, d(i, m));
    total += best;
  }
  return total;
}

// Nearest medoid of each point; ties go to the lowest medoid index.
inline std::vector<std::size_t> assign_to_medoids(const Matrix& d, const std::vector<std::size_t>& medoids) {
  std::vector<std::size_t> sorted = medoids;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::size_t best = sorted.front();
    for (std::size_t m : sorted)
      if (d(i, m) < d(i, best)) best = m;
    // a medoid always belongs to its own cluster
    if (std::find(sorted.begin(), sorted.end(), i) != sorted.end()) best = i;
    out[i] = best;
  }
  return out;
}

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Best k-subset by exhaustive enumeration in lexicographic order; the first
// subset reaching the minimum cost wins.
inline std::vector<std::size_t> kmedoids_exhaustive(const Matrix& d, std::size_t k) {
  const std::size_t n = d.rows();
  check_k(n, k, "kmedoids_exhaustive");
  std::vector<std::size_t> cur(k);
  std::iota(cur.begin(), cur.end(), std::size_t{0});
  std::vector<std::size_t> best = cur;
  double best_cost = medoid_cost(d, cur);
  for (;;) {
    std::size_t i = k;
    while (i > 0 && cur[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++cur[i - 1];
    for (std::size_t j = i; j < k; ++j) cur[j] = cur[j - 1] + 1;
    const double c = medoid_cost(d, cur);
    if (c < best_cost - 1e-12) {
      best_cost = c;
      best = cur;
    }
  }
  return best;
}

// PAM: greedy BUILD initialization, then best-improvement swaps until no
// swap lowers the cost.
inline std::vector<std::size_t> kmedoids_pam(const Matrix& d, std::size_t k) {
  const std::size_t n = d.rows();
  check_k(n, k, "kmedoids_pam");
  std::vector<std::size_t> med;
  std::vector<char> is_med(n, 0);
  while (med.size() < k) {
    std::size_t pick = n;
    double pick_cost = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (is_med[c]) continue;
      med.push_back(c);
      const double cost = medoid_cost(d, med);
      med.pop_back();
      if (cost < pick_cost - 1e-12) {
        pick_cost = cost;
        pick = c;
      }
    }
    med.push_back(pick);
    is_med[pick] = 1;
  }
  double cost = medoid_cost(d, med);
  for (;;) {
    double best = cost;
    std::size_t bi = k, bc = n;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t c = 0; c < n; ++c) {
        if (is_med[c]) continue;
        auto trial = med;
        trial[i] = c;
        const double tc = medoid_cost(d, trial);
        if (tc < best - 1e-12) {
          best = tc;
          bi = i;
          bc = c;
        }
      }
    }
    if (bi == k) break;
    is_med[med[bi]] = 0;
    is_med[bc] = 1;
    med[bi] = bc;
    cost = best;
  }
  std::sort(med.begin(), med.end());
  return med;
}

inline constexpr double kExhaustiveSubsetLimit = 5000.0;

inline std::vector<std::size_t> kmedoids(const Matrix& d, std::size_t k) {
  if (d.rows() != d.cols()) throw std::invalid_argument("kmedoids: distance matrix is not square");
  if (binomial(d.rows(), k) <= kExhaustiveSubsetLimit) return kmedoids_exhaustive(d, k);
  return kmedoids_pam(d, k);
}

// Medoids ordered by cluster size (largest first, ties to the lowest index)
// with cluster-fraction weights.
inline ReducedSelection selection_from_medoids(const Matrix& d, const std::vector<std::size_t>& medoids) {
  const auto owner = assign_to_medoids(d, medoids);
  std::vector<std::size_t> order = medoids;
  std::sort(order.begin(), order.end());
  std::vector<std::size_t> size(d.rows(), 0);
  for (std::size_t o : owner) ++size[o];
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return size[a] > size[b]; });
  ReducedSelection sel;
  sel.indices = order;
  for (std::size_t m : order) sel.weights.push_back(static_cast<double>(size[m]) / static_cast<double>(d.rows()));
  return sel;
}

inline Matrix euclidean_distances(const std::vector<std::vector<double>>& v) {
  const std::size_t n = v.size();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (v[i].size() != v[j].size()) throw std::invalid_argument("euclidean_distances: vectors differ in length");
      double s = 0.0;
      for (std::size_t t = 0; t < v[i].size(); ++t) s += (v[i][t] - v[j][t]) * (v[i][t] - v[j][t]);
      d(i, j) = d(j, i) = std::sqrt(s);
    }
  return d;
}

// The seed is accepted for interface symmetry; the clustering itself is
// deterministic.
inline ReducedSelection baseline_kmedoids(const std::vector<std::vector<double>>& vectors, std::size_t k,
                                          std::uint64_t /*seed*/ = 0) {
  check_k(vectors.size(), k, "baseline_kmedoids");
  const Matrix d = euclidean_distances(vectors);
  return selection_from_medoids(d, kmedoids(d, k));
}

inline ReducedSelection baseline_kmedoids(const SpInstance& inst, std::size_t k, std::uint64_t seed = 0) {
  std::vector<std::vector<double>> v;
  for (const auto& sc : inst.scenarios) v.push_back(graphs::flatten_uncertain(sc));
  return baseline_kmedoids(v, k, seed);
}

struct Discrepancy {
  Matrix d;                               // d(i, j) = f_j(x*_i) - f_j(x*_j)
  std::vector<std::vector<double>> x;     // per-scenario optima x*_i
};

// Substitutes each single-scenario optimum into every other scenario.
inline Discrepancy cost_space_discrepancy(const SpInstance& inst, const mip::SolverOptions& solver = {},
                                          std::size_t threads = 1) {
  const std::size_t n = inst.num_scenarios();
  Discrepancy out;
  out.x.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto r = mip::solve_mip(build_extensive_form(inst, ReducedSelection::uniform({i})), solver);
    if (r.status != mip::Status::kOptimal)
      throw ScenarioInfeasible(i, std::string("single-scenario problem: ") + mip::to_string(r.status));
    out.x[i].assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(inst.n1()));
  });
  // fx(i, j) = f_j(x*_i)
  Matrix fx(n, n);
  parallel_for(n, threads, [&](std::size_t i) {
    const double cx = mip::dot(inst.first_stage.c, out.x[i]);
    for (std::size_t j = 0; j < n; ++j) fx(i, j) = cx + recourse_value(inst.scenarios[j], j, out.x[i], solver);
  });
  out.d = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.d(i, j) = fx(i, j) - fx(j, j);
  return out;
}

inline Matrix symmetrize(const Matrix& d) {
  Matrix s(d.rows(), d.cols());
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j) s(i, j) = d(i, j) + d(j, i);
  return s;
}

// Cost-space clustering: k-medoids on the symmetrized discrepancy.
inline ReducedSelection baseline_value_space(const SpInstance& inst, std::size_t k,
                                             const mip::SolverOptions& solver = {}, std::uint64_t /*seed*/ = 0,
                                             std::size_t threads = 1) {
  check_k(inst.num_scenarios(), k, "baseline_value_space");
  const Matrix s = symmetrize(cost_space_discrepancy(inst, solver, threads).d);
  return selection_from_medoids(s, kmedoids(s, k));
}

}  // namespace scenred::bench
