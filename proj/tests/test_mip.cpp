#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "scenred/mip/branch_and_bound.hpp"
#include "scenred/mip/simplex.hpp"

using namespace scenred;
using namespace scenred::mip;
using testutil::make_problem;

TEST(SolveLp, SingleVariableAtUpperBound) {
  auto p = make_problem({-1.0}, {}, {}, {}, {0.0}, {1.0});
  const auto r = solve_lp(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.x[0], 1.0, 1e-9);
  EXPECT_NEAR(r.objective, -1.0, 1e-9);
}

TEST(SolveLp, TightCoveringRow) {
  auto p = make_problem({1.0, 1.0}, {{1.0, 1.0}}, {1.0}, {Sense::kGe}, {0.0, 0.0}, {kInf, kInf});
  const auto r = solve_lp(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-9);
}

TEST(SolveLp, PolygonMatchesVertexEnumeration) {
  // min -x - 2y  s.t. x + y <= 4, x <= 3, x, y >= 0.
  auto p = make_problem({-1.0, -2.0}, {{1.0, 1.0}, {1.0, 0.0}}, {4.0, 3.0}, {Sense::kLe, Sense::kLe}, {0.0, 0.0},
                        {kInf, kInf});
  // Oracle: intersect every pair of the four boundary lines, keep feasible points.
  const double lines[4][3] = {{1, 1, 4}, {1, 0, 3}, {1, 0, 0}, {0, 1, 0}};
  double best = kInf;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      const double det = lines[a][0] * lines[b][1] - lines[a][1] * lines[b][0];
      if (std::abs(det) < 1e-12) continue;
      const double x = (lines[a][2] * lines[b][1] - lines[a][1] * lines[b][2]) / det;
      const double y = (lines[a][0] * lines[b][2] - lines[a][2] * lines[b][0]) / det;
      if (x < -1e-12 || y < -1e-12 || x + y > 4 + 1e-12 || x > 3 + 1e-12) continue;
      best = std::min(best, -x - 2 * y);
    }
  const auto r = solve_lp(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.objective, best, 1e-9);
  EXPECT_NEAR(best, -8.0, 1e-12);
}

TEST(SolveLp, EqualityAndInfeasibility) {
  auto eq = make_problem({1.0, 2.0}, {{1.0, 1.0}}, {3.0}, {Sense::kEq}, {0.0, 0.0}, {2.0, 2.0});
  const auto r = solve_lp(eq);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.objective, 4.0, 1e-9);  // x = 2, y = 1

  auto bad = make_problem({1.0}, {{1.0}}, {5.0}, {Sense::kGe}, {0.0}, {1.0});
  EXPECT_EQ(solve_lp(bad).status, Status::kInfeasible);
}

TEST(SolveLp, DetectsUnbounded) {
  auto p = make_problem({-1.0, 0.0}, {{1.0, -1.0}}, {1.0}, {Sense::kLe}, {0.0, 0.0}, {kInf, kInf});
  EXPECT_EQ(solve_lp(p).status, Status::kUnbounded);
}

TEST(SolveLp, DimensionMismatchThrows) {
  auto p = make_problem({1.0, 1.0}, {{1.0, 1.0}}, {1.0}, {Sense::kLe}, {0.0, 0.0}, {1.0, 1.0});
  p.sense.clear();
  EXPECT_THROW(solve_lp(p), std::invalid_argument);
}

TEST(SolveLp, WeakDualityAgainstFeasiblePoints) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = testutil::random_mixed_binary(rng, 0, 6, 4);
    const auto r = solve_lp(p);
    if (r.status != Status::kOptimal) continue;
    EXPECT_LE(max_violation(p, r.x, false), 1e-6);
    for (int s = 0; s < 200; ++s) {
      std::vector<double> x(p.num_vars());
      for (std::size_t j = 0; j < x.size(); ++j) x[j] = rng.uniform(p.lower[j], p.upper[j]);
      if (max_violation(p, x, false) > 0.0) continue;
      EXPECT_LE(r.objective, dot(p.objective, x) + 1e-9);
    }
  }
}

TEST(SolveLp, ObjectiveInvariantUnderRowPermutation) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto p = testutil::random_mixed_binary(rng, 0, 5, 5);
    std::vector<std::size_t> perm(p.num_rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    MipProblem q = p;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      for (std::size_t j = 0; j < p.num_vars(); ++j) q.rows(i, j) = p.rows(perm[i], j);
      q.rhs[i] = p.rhs[perm[i]];
      q.sense[i] = p.sense[perm[i]];
    }
    const auto a = solve_lp(p);
    const auto b = solve_lp(q);
    ASSERT_EQ(a.status, b.status);
    if (a.status == Status::kOptimal) {
      EXPECT_NEAR(a.objective, b.objective, 1e-7);
    }
  }
}

TEST(SolveMip, ContinuousProblemMatchesLp) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = testutil::random_mixed_binary(rng, 0, 4, 3);
    const auto lp = solve_lp(p);
    const auto mip = solve_mip(p);
    ASSERT_EQ(lp.status, mip.status);
    if (lp.status == Status::kOptimal) {
      EXPECT_EQ(lp.objective, mip.objective);
      EXPECT_EQ(lp.x, mip.x);
    }
  }
}

TEST(SolveMip, TwoBinariesWithFractionalCap) {
  auto p = make_problem({-1.0, -1.0}, {{1.0, 1.0}}, {1.5}, {Sense::kLe}, {0.0, 0.0}, {1.0, 1.0}, {1, 1});
  const auto r = solve_mip(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.objective, -1.0, 1e-9);
  // Oracle: the four binary points.
  double best = kInf;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      if (a + b <= 1.5) best = std::min(best, -1.0 * a - 1.0 * b);
  EXPECT_NEAR(r.objective, best, 1e-12);
}

TEST(SolveMip, KnapsackMatchesEnumeration) {
  auto p = make_problem({-4.0, -5.0, -3.0}, {{2.0, 3.0, 1.0}}, {4.0}, {Sense::kLe}, {0, 0, 0}, {1, 1, 1}, {1, 1, 1});
  double best = kInf;
  for (int m = 0; m < 8; ++m) {
    const int a = m & 1, b = (m >> 1) & 1, c = (m >> 2) & 1;
    if (2 * a + 3 * b + c <= 4) best = std::min(best, -4.0 * a - 5.0 * b - 3.0 * c);
  }
  const auto r = solve_mip(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.objective, best, 1e-9);
  EXPECT_NEAR(best, -8.0, 1e-12);
  EXPECT_LE(max_violation(p, r.x, true), 1e-6);
}

TEST(SolveMip, RandomProblemsMatchBruteForce) {
  Rng rng(2024);
  int optimal = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t nb = 1 + rng.below(8);
    auto p = testutil::random_mixed_binary(rng, nb, 1 + rng.below(4), 2 + rng.below(4));
    const double oracle = testutil::brute_force_binary(p);
    const auto r = solve_mip(p);
    if (std::isinf(oracle)) {
      EXPECT_EQ(r.status, Status::kInfeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(r.status, Status::kOptimal) << "trial " << trial;
    EXPECT_NEAR(r.objective, oracle, 1e-6) << "trial " << trial;
    EXPECT_LE(max_violation(p, r.x, true), 1e-6);
    ++optimal;
  }
  EXPECT_GT(optimal, 20);
}

TEST(SolveMip, WorkMetricIsDeterministic) {
  Rng rng(8);
  auto p = testutil::random_mixed_binary(rng, 8, 3, 5);
  const auto a = solve_mip(p);
  const auto b = solve_mip(p);
  EXPECT_EQ(a.work, b.work);
  EXPECT_EQ(a.x, b.x);
  EXPECT_GE(a.work.simplex_pivots, 0);
  EXPECT_GE(a.work.bnb_nodes, 1);
}

TEST(SolveMip, NodeLimitReportsStatus) {
  Rng rng(77);
  SolverOptions opt;
  opt.node_limit = 1;
  opt.decompose = false;
  bool saw_limit = false;
  for (int trial = 0; trial < 40 && !saw_limit; ++trial) {
    auto p = testutil::random_mixed_binary(rng, 8, 2, 4);
    const auto r = solve_mip(p, opt);
    if (r.status == Status::kNodeLimit) {
      saw_limit = true;
      if (r.has_solution()) {
        EXPECT_LE(max_violation(p, r.x, true), 1e-6);
      }
    }
  }
  EXPECT_TRUE(saw_limit);
}

TEST(SolveMip, CutoffExcludesWorseSolutions) {
  auto p = make_problem({-4.0, -5.0, -3.0}, {{2.0, 3.0, 1.0}}, {4.0}, {Sense::kLe}, {0, 0, 0}, {1, 1, 1}, {1, 1, 1});
  SolverOptions opt;
  opt.cutoff = -8.0;  // the optimum is exactly -8, nothing strictly better
  EXPECT_EQ(solve_mip(p, opt).status, Status::kInfeasible);
  opt.cutoff = -7.5;
  const auto r = solve_mip(p, opt);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.objective, -8.0, 1e-9);
}

TEST(SolveMip, DecompositionAgreesWithMonolithic) {
  Rng rng(19);
  // Two independent knapsacks share no rows.
  for (int trial = 0; trial < 20; ++trial) {
    auto p = testutil::random_mixed_binary(rng, 6, 2, 0);
    p.rows = Matrix(2, 8);
    for (std::size_t j = 0; j < 4; ++j) p.rows(0, j) = rng.uniform(1.0, 3.0);
    for (std::size_t j = 4; j < 8; ++j) p.rows(1, j) = rng.uniform(1.0, 3.0);
    p.rhs = {4.0, 4.0};
    p.sense = {Sense::kLe, Sense::kLe};
    SolverOptions mono;
    mono.decompose = false;
    const auto a = solve_mip(p);
    const auto b = solve_mip(p, mono);
    ASSERT_EQ(a.status, Status::kOptimal);
    ASSERT_EQ(b.status, Status::kOptimal);
    EXPECT_NEAR(a.objective, b.objective, 1e-6);
    EXPECT_NEAR(a.objective, testutil::brute_force_binary(p), 1e-6);
  }
}

TEST(SolveMip, UnboundedIntegralVariableRejected) {
  auto p = make_problem({1.0}, {}, {}, {}, {0.0}, {kInf}, {1});
  EXPECT_THROW(solve_mip(p), std::invalid_argument);
}
