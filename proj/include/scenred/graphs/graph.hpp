#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "scenred/core/types.hpp"
#include "scenred/matrix.hpp"
#include "scenred/sparse.hpp"

namespace scenred::graphs {

inline constexpr std::size_t kVarFeatures = 4;   // objective, integral flag, lower, capped upper
inline constexpr std::size_t kConsFeatures = 2;  // parallelism, rhs
inline constexpr std::size_t kNodeFeatures = std::max(kVarFeatures, kConsFeatures);
inline constexpr double kBoundCap = 1e6;

struct Edge {
  std::size_t var = 0;
  std::size_t cons = 0;
  double coeff = 0.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Variable/constraint graph of one scenario subproblem. Node order in
// padded_node_features is variables first, then constraints.
struct BipartiteGraph {
  Matrix var_features;
  Matrix cons_features;
  std::vector<Edge> edges;
  Matrix padded_node_features;

  std::size_t num_vars() const { return var_features.rows(); }
  std::size_t num_cons() const { return cons_features.rows(); }
  std::size_t num_nodes() const { return num_vars() + num_cons(); }
};

struct InstanceGraph {
  Matrix adjacency;  // N x N cosine similarities, zero diagonal
  std::size_t size() const { return adjacency.rows(); }
};

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

inline Matrix pad_features(const Matrix& vars, const Matrix& cons) {
  Matrix out(vars.rows() + cons.rows(), kNodeFeatures);
  for (std::size_t i = 0; i < vars.rows(); ++i)
    for (std::size_t f = 0; f < vars.cols(); ++f) out(i, f) = vars(i, f);
  for (std::size_t i = 0; i < cons.rows(); ++i)
    for (std::size_t f = 0; f < cons.cols(); ++f) out(vars.rows() + i, f) = cons(i, f);
  return out;
}

// Subproblem min c x + q y  s.t.  A x <= b,  T x + W y <= h.
inline BipartiteGraph build_scenario_subgraph(const FirstStage& fs, const Scenario& sc) {
  validate(fs);
  validate(sc, fs.num_vars());
  const std::size_t n1 = fs.num_vars(), n2 = sc.num_vars(), m1 = fs.num_rows(), m2 = sc.num_rows();
  BipartiteGraph g;
  g.var_features = Matrix(n1 + n2, kVarFeatures);
  std::vector<double> obj(n1 + n2);
  auto set_var = [&](std::size_t v, double cost, VarKind kind, VarBounds bd) {
    obj[v] = cost;
    g.var_features(v, 0) = cost;
    g.var_features(v, 1) = is_integral(kind) ? 1.0 : 0.0;
    g.var_features(v, 2) = std::max(bd.lo, -kBoundCap);
    g.var_features(v, 3) = std::min(bd.hi, kBoundCap);
  };
  for (std::size_t j = 0; j < n1; ++j) set_var(j, fs.c[j], fs.kinds[j], fs.bounds[j]);
  for (std::size_t j = 0; j < n2; ++j) set_var(n1 + j, sc.q[j], sc.y_kinds[j], sc.y_bounds[j]);

  g.cons_features = Matrix(m1 + m2, kConsFeatures);
  std::vector<double> row(n1 + n2);
  for (std::size_t i = 0; i < m1 + m2; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    double rhs = 0.0;
    if (i < m1) {
      for (std::size_t j = 0; j < n1; ++j) row[j] = fs.A(i, j);
      rhs = fs.b[i];
    } else {
      const std::size_t r = i - m1;
      for (std::size_t j = 0; j < n1; ++j) row[j] = sc.T(r, j);
      for (std::size_t j = 0; j < n2; ++j) row[n1 + j] = sc.W(r, j);
      rhs = sc.h[r];
    }
    g.cons_features(i, 0) = cosine(obj, row);
    g.cons_features(i, 1) = rhs;
    for (std::size_t v = 0; v < row.size(); ++v)
      if (row[v] != 0.0) g.edges.push_back({v, i, row[v]});
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.var, a.cons) < std::tie(b.var, b.cons); });
  g.padded_node_features = pad_features(g.var_features, g.cons_features);
  return g;
}

// (q, row-major W, h, row-major T)
inline std::vector<double> flatten_uncertain(const Scenario& sc) {
  std::vector<double> v;
  v.reserve(sc.q.size() + sc.W.size() + sc.h.size() + sc.T.size());
  v.insert(v.end(), sc.q.begin(), sc.q.end());
  v.insert(v.end(), sc.W.data().begin(), sc.W.data().end());
  v.insert(v.end(), sc.h.begin(), sc.h.end());
  v.insert(v.end(), sc.T.data().begin(), sc.T.data().end());
  return v;
}

inline InstanceGraph build_instance_adjacency(const std::vector<Scenario>& scenarios) {
  if (scenarios.empty()) throw std::invalid_argument("build_instance_adjacency: no scenarios");
  std::vector<std::vector<double>> flat;
  flat.reserve(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    flat.push_back(flatten_uncertain(scenarios[i]));
    const bool zero = std::all_of(flat.back().begin(), flat.back().end(), [](double x) { return x == 0.0; });
    if (zero) throw std::invalid_argument("build_instance_adjacency: scenario " + std::to_string(i) + " is all zero");
    if (flat.back().size() != flat.front().size())
      throw std::invalid_argument("build_instance_adjacency: scenario " + std::to_string(i) + " has other dimensions");
  }
  const std::size_t n = scenarios.size();
  InstanceGraph ig;
  ig.adjacency = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) ig.adjacency(i, j) = ig.adjacency(j, i) = cosine(flat[i], flat[j]);
  return ig;
}

// Cosine similarities after z-scoring every coordinate of the flattened
// vectors across the scenarios of the instance. Coordinates shared by all
// scenarios drop out, so the weights reflect how scenarios differ rather
// than the common structure. A scenario equal to the mean has no
// similarity to any other.
inline InstanceGraph build_centered_instance_adjacency(const std::vector<Scenario>& scenarios) {
  if (scenarios.empty()) throw std::invalid_argument("build_centered_instance_adjacency: no scenarios");
  const std::size_t n = scenarios.size();
  std::vector<std::vector<double>> flat;
  flat.reserve(n);
  for (const auto& sc : scenarios) {
    flat.push_back(flatten_uncertain(sc));
    if (flat.back().size() != flat.front().size())
      throw std::invalid_argument("build_centered_instance_adjacency: scenarios have other dimensions");
  }
  for (std::size_t c = 0; c < flat.front().size(); ++c) {
    double mean = 0.0;
    for (const auto& v : flat) mean += v[c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& v : flat) var += (v[c] - mean) * (v[c] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (auto& v : flat) v[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? (v[c] - mean) / sd : 0.0;
  }
  InstanceGraph ig;
  ig.adjacency = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) ig.adjacency(i, j) = ig.adjacency(j, i) = cosine(flat[i], flat[j]);
  return ig;
}

// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
inline Matrix normalize_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("normalize_adjacency: matrix is " + a.shape_string());
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) < 0.0) throw std::invalid_argument("normalize_adjacency: negative entry");
      deg += a(i, j);
    }
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = inv_sqrt[i] * ((i == j ? 1.0 : 0.0) + a(i, j)) * inv_sqrt[j];
  return out;
}

// Instance-graph adjacency for message passing; negative similarities carry
// no weight.
inline Matrix instance_message_adjacency(const InstanceGraph& ig) {
  Matrix a = ig.adjacency;
  for (double& v : a.data()) v = std::max(v, 0.0);
  return normalize_adjacency(a);
}

// Normalized subgraph adjacency over |coeff|, in sparse form.
inline SparseMatrix subgraph_message_adjacency(const BipartiteGraph& g) {
  const std::size_t n = g.num_nodes(), nv = g.num_vars();
  std::vector<double> deg(n, 1.0);
  for (const Edge& e : g.edges) {
    deg[e.var] += std::abs(e.coeff);
    deg[nv + e.cons] += std::abs(e.coeff);
  }
  std::vector<std::tuple<std::size_t, std::size_t, double>> t;
  t.reserve(n + 2 * g.edges.size());
  for (std::size_t i = 0; i < n; ++i) t.emplace_back(i, i, 1.0 / deg[i]);
  for (const Edge& e : g.edges) {
    const double w = std::abs(e.coeff) / std::sqrt(deg[e.var] * deg[nv + e.cons]);
    t.emplace_back(e.var, nv + e.cons, w);
    t.emplace_back(nv + e.cons, e.var, w);
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

namespace detail {
struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> sd;
};

template <typename Get>
ColumnStats column_stats(const std::vector<BipartiteGraph>& gs, std::size_t width, Get get) {
  ColumnStats st{std::vector<double>(width, 0.0), std::vector<double>(width, 0.0)};
  double count = 0.0;
  for (const auto& g : gs) {
    const Matrix& m = get(g);
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t f = 0; f < width; ++f) st.mean[f] += m(i, f);
    count += static_cast<double>(m.rows());
  }
  if (count == 0.0) return st;
  for (double& v : st.mean) v /= count;
  for (const auto& g : gs) {
    const Matrix& m = get(g);
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t f = 0; f < width; ++f) st.sd[f] += (m(i, f) - st.mean[f]) * (m(i, f) - st.mean[f]);
  }
  for (double& v : st.sd) v = std::sqrt(v / count);
  return st;
}

inline void apply_stats(Matrix& m, const ColumnStats& st) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t f = 0; f < m.cols(); ++f)
      if (st.sd[f] > 1e-12) m(i, f) = (m(i, f) - st.mean[f]) / st.sd[f];
}
}  // namespace detail

// Z-scores each feature column over all subgraphs of one instance, variable
// and constraint columns separately. Constant columns are left as they are.
inline void standardize_features(std::vector<BipartiteGraph>& gs) {
  const auto vs = detail::column_stats(gs, kVarFeatures, [](const BipartiteGraph& g) -> const Matrix& {
    return g.var_features;
  });
  const auto cs = detail::column_stats(gs, kConsFeatures, [](const BipartiteGraph& g) -> const Matrix& {
    return g.cons_features;
  });
  for (auto& g : gs) {
    detail::apply_stats(g.var_features, vs);
    detail::apply_stats(g.cons_features, cs);
    g.padded_node_features = pad_features(g.var_features, g.cons_features);
  }
}

// Plain-text dump: header, one line per variable node, per constraint node,
// and per edge.
inline std::string dump_graph(const BipartiteGraph& g) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  os << "bipartite vars=" << g.num_vars() << " cons=" << g.num_cons() << " edges=" << g.edges.size() << "\n";
  for (std::size_t i = 0; i < g.num_vars(); ++i) {
    os << "var " << i;
    for (std::size_t f = 0; f < g.var_features.cols(); ++f) os << ' ' << num(g.var_features(i, f));
    os << "\n";
  }
  for (std::size_t i = 0; i < g.num_cons(); ++i) {
    os << "cons " << i;
    for (std::size_t f = 0; f < g.cons_features.cols(); ++f) os << ' ' << num(g.cons_features(i, f));
    os << "\n";
  }
  for (const Edge& e : g.edges) os << "edge " << e.var << ' ' << e.cons << ' ' << num(e.coeff) << "\n";
  return os.str();
}

}  // namespace scenred::graphs
