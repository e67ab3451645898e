#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "scenred/core/types.hpp"
#include "scenred/rng.hpp"

namespace scenred {

// Sampling ranges for the facility location family.
struct CflpRanges {
  double open_cost_lo = 600, open_cost_hi = 1500;
  double capacity_lo = 100, capacity_hi = 150;
  double cost_factor_lo = 5, cost_factor_hi = 105;
  double presence_lo = 0.8, presence_hi = 0.9;
  double demand_lo = 20, demand_hi = 80;
  double penalty = 1000;
  std::size_t max_open = 8;
};

// Column layout of a facility location scenario: y(c,f) customer-major, then
// one recourse variable z(f) per facility.
struct CflpLayout {
  std::size_t facilities = 0;
  std::size_t customers = 0;
  std::size_t y(std::size_t c, std::size_t f) const { return c * facilities + f; }
  std::size_t z(std::size_t f) const { return customers * facilities + f; }
  std::size_t n2() const { return customers * facilities + facilities; }
  // capacity rows, linking rows, then a (<=, >=) pair per customer
  std::size_t m2() const { return 2 * facilities + 2 * customers; }
};

// Two-stage capacitated facility location with random customer presence and
// per-(customer, facility) demand.
//
//   min  sum_f o_f x_f + sum_s p_s ( sum_{c,f} s_cf y_cf + sum_f b z_f )
//   s.t. sum_f x_f <= v
//        sum_c q_cf y_cf - z_f - cap_f x_f <= 0      (per f)
//        z_f - M x_f <= 0                            (per f)
//        sum_f y_cf = h_c  (as a <= / >= row pair)   (per c)
//        x, y binary; z >= 0
inline SpInstance gen_cflp(std::size_t num_facilities, std::size_t num_customers, std::size_t num_scenarios,
                           std::uint64_t seed, const CflpRanges& rg = {}) {
  if (num_facilities == 0 || num_customers == 0 || num_scenarios == 0)
    throw std::invalid_argument("gen_cflp: counts must be >= 1");
  const std::size_t F = num_facilities;
  const std::size_t C = num_customers;
  const CflpLayout L{F, C};
  Rng rng(seed);

  std::vector<std::array<double, 2>> fac(F), cus(C);
  for (auto& p : fac) p = {rng.uniform(), rng.uniform()};
  for (auto& p : cus) p = {rng.uniform(), rng.uniform()};
  std::vector<double> open_cost(F), capacity(F);
  for (std::size_t f = 0; f < F; ++f) {
    open_cost[f] = rng.uniform(rg.open_cost_lo, rg.open_cost_hi);
    capacity[f] = rng.uniform(rg.capacity_lo, rg.capacity_hi);
  }
  std::vector<double> transport(C * F);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t f = 0; f < F; ++f) {
      const double dist = std::hypot(cus[c][0] - fac[f][0], cus[c][1] - fac[f][1]);
      transport[L.y(c, f)] = dist * rng.uniform(rg.cost_factor_lo, rg.cost_factor_hi);
    }
  }
  std::vector<double> presence(C);
  for (auto& p : presence) p = rng.uniform(rg.presence_lo, rg.presence_hi);

  SpInstance inst;
  inst.meta = {Family::kCflp, seed};
  FirstStage& fs = inst.first_stage;
  fs.c = open_cost;
  fs.A = Matrix(1, F, 1.0);
  fs.b = {static_cast<double>(std::min(rg.max_open, F))};
  fs.kinds.assign(F, VarKind::kBinary);
  fs.bounds.assign(F, {0.0, 1.0});

  std::vector<double> q(L.n2());
  for (std::size_t i = 0; i < C * F; ++i) q[i] = transport[i];
  for (std::size_t f = 0; f < F; ++f) q[L.z(f)] = rg.penalty;
  std::vector<VarKind> y_kinds(L.n2(), VarKind::kBinary);
  std::vector<VarBounds> y_bounds(L.n2(), {0.0, 1.0});
  for (std::size_t f = 0; f < F; ++f) {
    y_kinds[L.z(f)] = VarKind::kContinuous;
    y_bounds[L.z(f)] = {0.0, kInfinity};
  }

  inst.scenarios.reserve(num_scenarios);
  for (std::size_t s = 0; s < num_scenarios; ++s) {
    std::vector<double> present(C);
    for (std::size_t c = 0; c < C; ++c) present[c] = rng.bernoulli(presence[c]) ? 1.0 : 0.0;
    Matrix demand(C, F);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t f = 0; f < F; ++f) demand(c, f) = rng.uniform(rg.demand_lo, rg.demand_hi);
    double big_m = 0.0;
    for (std::size_t c = 0; c < C; ++c) big_m += *std::max_element(demand.row(c).begin(), demand.row(c).end());

    Scenario sc;
    sc.q = q;
    sc.W = Matrix(L.m2(), L.n2());
    sc.T = Matrix(L.m2(), F);
    sc.h.assign(L.m2(), 0.0);
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t c = 0; c < C; ++c) sc.W(f, L.y(c, f)) = demand(c, f);
      sc.W(f, L.z(f)) = -1.0;
      sc.T(f, f) = -capacity[f];
      sc.W(F + f, L.z(f)) = 1.0;
      sc.T(F + f, f) = -big_m;
    }
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t r = 2 * F + 2 * c;
      for (std::size_t f = 0; f < F; ++f) {
        sc.W(r, L.y(c, f)) = 1.0;
        sc.W(r + 1, L.y(c, f)) = -1.0;
      }
      sc.h[r] = present[c];
      sc.h[r + 1] = -present[c];
    }
    sc.prob = 1.0 / static_cast<double>(num_scenarios);
    sc.y_kinds = y_kinds;
    sc.y_bounds = y_bounds;
    inst.scenarios.push_back(std::move(sc));
  }
  return inst;
}

struct NdpRanges {
  double supply_lo = 5, supply_hi = 15;
  double open_cost_lo = 3, open_cost_hi = 11;
  double transport_lo = 5, transport_hi = 11;
  double capacity_lo = 10, capacity_hi = 41;
  double penalty = 1000;
  std::size_t commodities = 2;
};

// Vertex numbering: sources, then sinks, then intermediates. Directed edges
// (i, j), i != j, in lexicographic order, excluding source-source and
// sink-sink pairs.
struct NdpLayout {
  std::size_t sources = 0, sinks = 0, intermediates = 0, commodities = 2;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  NdpLayout(std::size_t s, std::size_t t, std::size_t i, std::size_t k)
      : sources(s), sinks(t), intermediates(i), commodities(k) {
    const std::size_t V = vertices();
    for (std::size_t a = 0; a < V; ++a)
      for (std::size_t b = 0; b < V; ++b)
        if (a != b && !(is_source(a) && is_source(b)) && !(is_sink(a) && is_sink(b))) edges.emplace_back(a, b);
  }
  std::size_t vertices() const { return sources + sinks + intermediates; }
  bool is_source(std::size_t v) const { return v < sources; }
  bool is_sink(std::size_t v) const { return v >= sources && v < sources + sinks; }
  std::size_t num_edges() const { return edges.size(); }
  std::size_t y(std::size_t e, std::size_t c) const { return e * commodities + c; }
  std::size_t z(std::size_t p, std::size_t c) const { return num_edges() * commodities + p * commodities + c; }
  std::size_t n2() const { return num_edges() * commodities + sources * commodities; }
  std::size_t m2() const {
    return commodities * (2 * intermediates + sinks + sources + 2 * sources) + num_edges();
  }
};

// Two-stage multi-commodity network design. Sources ship a random supply of
// each commodity towards the sinks; a source that cannot ship its full
// supply pays a fixed penalty.
//
//   min  sum_e o_e x_e + sum_s p_s ( sum_{e,c} t_ec y_ec + sum_{p,c} b z_pc )
//   per commodity c:
//     out(v) - in(v) = 0 for intermediates v   (as a <= / >= pair)
//     out(t) <= 0 for sinks, in(p) <= 0 for sources
//     out(p) <= d_pc,  d_pc <= out(p) + M z_pc  for sources p
//   sum_c y_ec <= cap_e x_e per edge;  x, z binary; y >= 0
inline SpInstance gen_ndp(std::size_t num_sources, std::size_t num_sinks, std::size_t num_intermediates,
                          std::size_t num_scenarios, std::uint64_t seed, const NdpRanges& rg = {}) {
  if (num_sources == 0 || num_sinks == 0 || num_intermediates == 0 || num_scenarios == 0)
    throw std::invalid_argument("gen_ndp: counts must be >= 1");
  const NdpLayout L(num_sources, num_sinks, num_intermediates, rg.commodities);
  const std::size_t E = L.num_edges();
  const std::size_t K = rg.commodities;
  const std::size_t S = num_sources;
  Rng rng(seed);

  std::vector<double> open_cost(E), capacity(E), transport(E * K);
  for (std::size_t e = 0; e < E; ++e) {
    open_cost[e] = rng.uniform(rg.open_cost_lo, rg.open_cost_hi);
    capacity[e] = rng.uniform(rg.capacity_lo, rg.capacity_hi);
    for (std::size_t c = 0; c < K; ++c) transport[L.y(e, c)] = rng.uniform(rg.transport_lo, rg.transport_hi);
  }

  SpInstance inst;
  inst.meta = {Family::kNdp, seed};
  FirstStage& fs = inst.first_stage;
  fs.c = open_cost;
  fs.A = Matrix(0, E);
  fs.kinds.assign(E, VarKind::kBinary);
  fs.bounds.assign(E, {0.0, 1.0});

  std::vector<double> q(L.n2());
  std::copy(transport.begin(), transport.end(), q.begin());
  for (std::size_t p = 0; p < S; ++p)
    for (std::size_t c = 0; c < K; ++c) q[L.z(p, c)] = rg.penalty;
  std::vector<VarKind> y_kinds(L.n2(), VarKind::kContinuous);
  std::vector<VarBounds> y_bounds(L.n2(), {0.0, kInfinity});
  for (std::size_t p = 0; p < S; ++p)
    for (std::size_t c = 0; c < K; ++c) {
      y_kinds[L.z(p, c)] = VarKind::kBinary;
      y_bounds[L.z(p, c)] = {0.0, 1.0};
    }

  for (std::size_t s = 0; s < num_scenarios; ++s) {
    Matrix supply(S, K);
    double total = 0.0;
    for (std::size_t p = 0; p < S; ++p)
      for (std::size_t c = 0; c < K; ++c) total += supply(p, c) = rng.uniform(rg.supply_lo, rg.supply_hi);

    Scenario sc;
    sc.q = q;
    sc.W = Matrix(L.m2(), L.n2());
    sc.T = Matrix(L.m2(), E);
    sc.h.assign(L.m2(), 0.0);
    std::size_t r = 0;
    for (std::size_t c = 0; c < K; ++c) {
      for (std::size_t v = S + num_sinks; v < L.vertices(); ++v) {
        for (std::size_t e = 0; e < E; ++e) {
          const double sgn = (L.edges[e].first == v) ? 1.0 : (L.edges[e].second == v ? -1.0 : 0.0);
          if (sgn == 0.0) continue;
          sc.W(r, L.y(e, c)) = sgn;
          sc.W(r + 1, L.y(e, c)) = -sgn;
        }
        r += 2;
      }
      for (std::size_t t = S; t < S + num_sinks; ++t) {
        for (std::size_t e = 0; e < E; ++e)
          if (L.edges[e].first == t) sc.W(r, L.y(e, c)) = 1.0;
        ++r;
      }
      for (std::size_t p = 0; p < S; ++p) {
        for (std::size_t e = 0; e < E; ++e)
          if (L.edges[e].second == p) sc.W(r, L.y(e, c)) = 1.0;
        ++r;
      }
      for (std::size_t p = 0; p < S; ++p) {
        for (std::size_t e = 0; e < E; ++e) {
          if (L.edges[e].first != p) continue;
          sc.W(r, L.y(e, c)) = 1.0;
          sc.W(r + 1, L.y(e, c)) = -1.0;
        }
        sc.h[r] = supply(p, c);
        sc.W(r + 1, L.z(p, c)) = -total;
        sc.h[r + 1] = -supply(p, c);
        r += 2;
      }
    }
    for (std::size_t e = 0; e < E; ++e, ++r) {
      for (std::size_t c = 0; c < K; ++c) sc.W(r, L.y(e, c)) = 1.0;
      sc.T(r, e) = -capacity[e];
    }
    sc.prob = 1.0 / static_cast<double>(num_scenarios);
    sc.y_kinds = y_kinds;
    sc.y_bounds = y_bounds;
    inst.scenarios.push_back(std::move(sc));
  }
  return inst;
}

// Copy with objective and constraint data multiplied by one factor drawn
// uniformly from [scale_lo, scale_hi]. Feasible sets are unchanged, so a
// cached optimum keeps x* and rescales v*.
inline SpInstance augment_instance(const SpInstance& inst, double scale_lo, double scale_hi, std::uint64_t seed) {
  if (!(scale_lo > 0.0) || !(scale_lo <= scale_hi))
    throw std::invalid_argument("augment_instance: need 0 < scale_lo <= scale_hi");
  Rng rng(seed);
  const double f = rng.uniform(scale_lo, scale_hi);
  SpInstance out = inst;
  auto scale = [f](std::vector<double>& v) {
    for (double& e : v) e *= f;
  };
  scale(out.first_stage.c);
  scale(out.first_stage.A.data());
  scale(out.first_stage.b);
  for (Scenario& sc : out.scenarios) {
    scale(sc.q);
    scale(sc.W.data());
    scale(sc.h);
    scale(sc.T.data());
  }
  if (out.cached_optimum) out.cached_optimum->value *= f;
  return out;
}

}  // namespace scenred
