#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "scenred/core/extensive_form.hpp"
#include "scenred/core/types.hpp"
#include "scenred/mip/branch_and_bound.hpp"
#include "scenred/parallel.hpp"
#include "scenred/rng.hpp"

namespace scenred::bench {

struct OrderCdfResult {
  double percentile = 0.0;  // fraction of shuffles strictly faster than the model order
  double model_time = 0.0;
  std::vector<double> samples;                   // one per shuffle
  std::vector<std::vector<std::size_t>> orders;  // the shuffled index orders
};

inline double reduced_solve_time(const SpInstance& inst, const ReducedSelection& sel, const mip::SolverOptions& solver,
                                 double node_weight) {
  const auto r = mip::solve_mip(build_extensive_form(inst, sel), solver);
  return r.work.time_units(node_weight);
}

// Shuffle s permutes sel (indices and weights together) with the stream
// derive_seed(seed, s).
inline OrderCdfResult order_cdf_experiment(const SpInstance& inst, const ReducedSelection& sel, std::size_t shuffles,
                                           std::uint64_t seed, const mip::SolverOptions& solver = {},
                                           double node_weight = 1.0, std::size_t threads = 1) {
  if (shuffles < 1) throw std::invalid_argument("order_cdf_experiment: shuffles must be at least 1");
  validate(sel, inst.num_scenarios());
  OrderCdfResult out;
  out.model_time = reduced_solve_time(inst, sel, solver, node_weight);
  out.samples.resize(shuffles);
  out.orders.resize(shuffles);
  parallel_for(shuffles, threads, [&](std::size_t s) {
    std::vector<std::size_t> perm(sel.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    Rng rng(derive_seed(seed, s));
    rng.shuffle(perm);
    ReducedSelection shuffled;
    for (std::size_t i : perm) {
      shuffled.indices.push_back(sel.indices[i]);
      shuffled.weights.push_back(sel.weights[i]);
    }
    out.orders[s] = shuffled.indices;
    out.samples[s] = reduced_solve_time(inst, shuffled, solver, node_weight);
  });
  std::size_t faster = 0;
  for (double t : out.samples)
    if (t < out.model_time) ++faster;
  out.percentile = static_cast<double>(faster) / static_cast<double>(shuffles);
  return out;
}

}  // namespace scenred::bench
