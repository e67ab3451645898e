#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "scenred/core/types.hpp"
#include "scenred/mip/problem.hpp"
#include "scenred/mip/simplex.hpp"
#include "scenred/rng.hpp"

namespace testutil {

using scenred::Matrix;
using scenred::mip::MipProblem;
using scenred::mip::Sense;

inline MipProblem make_problem(std::vector<double> c, std::vector<std::vector<double>> rows, std::vector<double> rhs,
                               std::vector<Sense> sense, std::vector<double> lo, std::vector<double> hi,
                               std::vector<char> integral = {}) {
  MipProblem p;
  const std::size_t n = c.size();
  p.objective = std::move(c);
  p.rows = Matrix(rows.size(), n);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < n; ++j) p.rows(i, j) = rows[i][j];
  p.rhs = std::move(rhs);
  p.sense = std::move(sense);
  p.lower = std::move(lo);
  p.upper = std::move(hi);
  p.integral = integral.empty() ? std::vector<char>(n, 0) : std::move(integral);
  return p;
}

// Oracle: enumerate every 0/1 fixing of the integral variables and solve the
// remaining LP. Returns +inf when no fixing is feasible.
inline double brute_force_binary(const MipProblem& p) {
  std::vector<std::size_t> ints;
  for (std::size_t j = 0; j < p.num_vars(); ++j)
    if (p.integral[j]) ints.push_back(j);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << ints.size()); ++mask) {
    MipProblem q = p;
    bool ok = true;
    for (std::size_t t = 0; t < ints.size(); ++t) {
      const double v = (mask >> t) & 1 ? 1.0 : 0.0;
      if (v < p.lower[ints[t]] || v > p.upper[ints[t]]) ok = false;
      q.lower[ints[t]] = q.upper[ints[t]] = v;
      q.integral[ints[t]] = 0;
    }
    if (!ok) continue;
    const auto r = scenred::mip::solve_lp(q);
    if (r.status == scenred::mip::Status::kOptimal) best = std::min(best, r.objective);
  }
  return best;
}

// Random bounded mixed-binary problem: `nb` binaries then `nc` continuous in
// [0, 10], `m` rows with mixed senses.
inline MipProblem random_mixed_binary(scenred::Rng& rng, std::size_t nb, std::size_t nc, std::size_t m) {
  const std::size_t n = nb + nc;
  MipProblem p;
  p.objective.resize(n);
  for (auto& c : p.objective) c = rng.uniform(-10.0, 10.0);
  p.rows = Matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (rng.bernoulli(0.6)) p.rows(i, j) = std::round(rng.uniform(-5.0, 5.0) * 4.0) / 4.0;
    const double r = rng.uniform();
    p.sense.push_back(r < 0.7 ? Sense::kLe : r < 0.9 ? Sense::kGe : Sense::kEq);
    p.rhs.push_back(std::round(rng.uniform(-3.0, 10.0) * 2.0) / 2.0);
  }
  for (std::size_t j = 0; j < n; ++j) {
    p.lower.push_back(0.0);
    p.upper.push_back(j < nb ? 1.0 : 10.0);
    p.integral.push_back(j < nb ? 1 : 0);
  }
  return p;
}

// One first stage with `n1` binaries and a scenario list built by `make`.
inline scenred::FirstStage binary_first_stage(std::vector<double> c) {
  scenred::FirstStage fs;
  const std::size_t n = c.size();
  fs.c = std::move(c);
  fs.A = Matrix(0, n);
  fs.kinds.assign(n, scenred::VarKind::kBinary);
  fs.bounds.assign(n, {0.0, 1.0});
  return fs;
}

}  // namespace testutil
