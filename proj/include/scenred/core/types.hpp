#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scenred/matrix.hpp"

namespace scenred {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class VarKind : std::uint8_t { kContinuous, kBinary, kInteger };

struct VarBounds {
  double lo = 0.0;
  double hi = kInfinity;
  friend bool operator==(const VarBounds&, const VarBounds&) = default;
};

inline bool is_integral(VarKind k) { return k != VarKind::kContinuous; }

// Deterministic first stage: min c^T x  s.t.  A x <= b.
struct FirstStage {
  std::vector<double> c;
  Matrix A;  // m1 x n1
  std::vector<double> b;
  std::vector<VarKind> kinds;
  std::vector<VarBounds> bounds;

  std::size_t num_vars() const { return c.size(); }
  std::size_t num_rows() const { return b.size(); }
  friend bool operator==(const FirstStage&, const FirstStage&) = default;
};

// One realization of (q, W, h, T): Q(x) = min q^T y  s.t.  W y <= h - T x.
struct Scenario {
  std::vector<double> q;
  Matrix W;  // m2 x n2
  std::vector<double> h;
  Matrix T;  // m2 x n1
  double prob = 0.0;
  std::vector<VarKind> y_kinds;
  std::vector<VarBounds> y_bounds;

  std::size_t num_vars() const { return q.size(); }
  std::size_t num_rows() const { return h.size(); }
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

enum class Family : std::uint8_t { kCflp, kNdp, kGeneric };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::kCflp: return "CFLP";
    case Family::kNdp: return "NDP";
    case Family::kGeneric: return "generic";
  }
  return "generic";
}

inline Family family_from_string(std::string_view s) {
  if (s == "CFLP" || s == "cflp") return Family::kCflp;
  if (s == "NDP" || s == "ndp") return Family::kNdp;
  if (s == "generic") return Family::kGeneric;
  throw std::invalid_argument("unknown problem family '" + std::string(s) + "'");
}

struct InstanceMeta {
  Family family = Family::kGeneric;
  std::uint64_t seed = 0;
  friend bool operator==(const InstanceMeta&, const InstanceMeta&) = default;
};

struct Optimum {
  double value = 0.0;
  std::vector<double> x;
  friend bool operator==(const Optimum&, const Optimum&) = default;
};

struct SpInstance {
  FirstStage first_stage;
  std::vector<Scenario> scenarios;
  InstanceMeta meta;
  std::optional<Optimum> cached_optimum;

  std::size_t n1() const { return first_stage.num_vars(); }
  std::size_t m1() const { return first_stage.num_rows(); }
  std::size_t n2() const { return scenarios.empty() ? 0 : scenarios.front().num_vars(); }
  std::size_t m2() const { return scenarios.empty() ? 0 : scenarios.front().num_rows(); }
  std::size_t num_scenarios() const { return scenarios.size(); }

  friend bool operator==(const SpInstance&, const SpInstance&) = default;
};

// Ordered subset of scenarios with reduced-problem weights.
struct ReducedSelection {
  std::vector<std::size_t> indices;
  std::vector<double> weights;

  static ReducedSelection uniform(std::vector<std::size_t> idx) {
    ReducedSelection s;
    s.weights.assign(idx.size(), idx.empty() ? 0.0 : 1.0 / static_cast<double>(idx.size()));
    s.indices = std::move(idx);
    return s;
  }

  std::size_t size() const { return indices.size(); }
  friend bool operator==(const ReducedSelection&, const ReducedSelection&) = default;
};

namespace detail {
inline void check_bounds(const std::vector<VarKind>& kinds, const std::vector<VarBounds>& bounds,
                         const std::string& where) {
  if (kinds.size() != bounds.size()) throw std::invalid_argument(where + ": kinds/bounds size mismatch");
  for (std::size_t j = 0; j < kinds.size(); ++j) {
    const auto& bd = bounds[j];
    if (std::isnan(bd.lo) || std::isnan(bd.hi) || bd.lo > bd.hi)
      throw std::invalid_argument(where + ": invalid bounds on variable " + std::to_string(j));
    if (kinds[j] == VarKind::kBinary && (bd.lo < 0.0 || bd.hi > 1.0))
      throw std::invalid_argument(where + ": binary variable " + std::to_string(j) + " has bounds outside [0,1]");
  }
}
}  // namespace detail

inline void validate(const FirstStage& fs) {
  const std::size_t n = fs.c.size();
  if (fs.A.rows() != fs.b.size() || (fs.A.rows() > 0 && fs.A.cols() != n))
    throw std::invalid_argument("FirstStage: A is " + fs.A.shape_string() + ", expected " +
                                std::to_string(fs.b.size()) + "x" + std::to_string(n));
  if (fs.kinds.size() != n) throw std::invalid_argument("FirstStage: kinds size mismatch");
  detail::check_bounds(fs.kinds, fs.bounds, "FirstStage");
}

inline void validate(const Scenario& sc, std::size_t n1) {
  const std::size_t n2 = sc.q.size();
  const std::size_t m2 = sc.h.size();
  if (sc.W.rows() != m2 || (m2 > 0 && sc.W.cols() != n2))
    throw std::invalid_argument("Scenario: W is " + sc.W.shape_string() + ", expected " + std::to_string(m2) + "x" +
                                std::to_string(n2));
  if (sc.T.rows() != m2 || (m2 > 0 && sc.T.cols() != n1))
    throw std::invalid_argument("Scenario: T is " + sc.T.shape_string() + ", expected " + std::to_string(m2) + "x" +
                                std::to_string(n1));
  if (!(sc.prob >= 0.0 && sc.prob <= 1.0)) throw std::invalid_argument("Scenario: probability outside [0,1]");
  if (sc.y_kinds.size() != n2) throw std::invalid_argument("Scenario: y kinds size mismatch");
  detail::check_bounds(sc.y_kinds, sc.y_bounds, "Scenario");
}

inline void validate(const SpInstance& inst) {
  validate(inst.first_stage);
  if (inst.scenarios.empty()) throw std::invalid_argument("SpInstance: no scenarios");
  const std::size_t n1 = inst.n1();
  const std::size_t n2 = inst.n2();
  const std::size_t m2 = inst.m2();
  double total = 0.0;
  for (std::size_t i = 0; i < inst.scenarios.size(); ++i) {
    const Scenario& sc = inst.scenarios[i];
    validate(sc, n1);
    if (sc.num_vars() != n2 || sc.num_rows() != m2)
      throw std::invalid_argument("SpInstance: scenario " + std::to_string(i) + " has inconsistent dimensions");
    total += sc.prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("SpInstance: scenario probabilities do not sum to 1");
  if (inst.cached_optimum && inst.cached_optimum->x.size() != n1)
    throw std::invalid_argument("SpInstance: cached optimum has wrong dimension");
}

inline void validate(const ReducedSelection& sel, std::size_t num_scenarios) {
  if (sel.indices.empty()) throw std::invalid_argument("ReducedSelection: empty");
  if (sel.weights.size() != sel.indices.size()) throw std::invalid_argument("ReducedSelection: weights size mismatch");
  std::vector<char> seen(num_scenarios, 0);
  for (std::size_t idx : sel.indices) {
    if (idx >= num_scenarios) throw std::invalid_argument("ReducedSelection: index " + std::to_string(idx) + " out of range");
    if (seen[idx]) throw std::invalid_argument("ReducedSelection: duplicate index " + std::to_string(idx));
    seen[idx] = 1;
  }
  double total = 0.0;
  for (double w : sel.weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("ReducedSelection: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("ReducedSelection: weights do not sum to 1");
}

}  // namespace scenred
