// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "helpers.hpp"
#include "scenred/bench/baselines.hpp"
#include "scenred/bench/evaluate.hpp"
#include "scenred/bench/order_cdf.hpp"
#include "scenred/cli/config.hpp"
#include "scenred/core/evaluate.hpp"
#include "scenred/core/extensive_form.hpp"
#include "scenred/core/generators.hpp"
#include "scenred/mip/branch_and_bound.hpp"
#include "scenred/nn/params.hpp"
#include "scenred/nn/policy.hpp"
#include "scenred/rl/env.hpp"
#include "scenred/rl/train.hpp"

using namespace scenred;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

SpInstance solved(SpInstance inst) {
  const auto r = solve_instance_exact(inst);
  if (r.status != mip::Status::kOptimal) throw std::runtime_error(std::string("exact solve failed: ") + mip::to_string(r.status));
  inst.cached_optimum = r.optimum;
  return inst;
}

std::vector<SpInstance> cflp_set(std::size_t count, std::size_t scenarios, std::uint64_t base) {
  std::vector<SpInstance> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(solved(gen_cflp(5, 10, scenarios, derive_seed(base, i))));
  return out;
}

// Sub-instance over the selection with its weights as probabilities.
SpInstance reduced_instance(const SpInstance& inst, const ReducedSelection& sel) {
  SpInstance out = inst;
  out.scenarios.clear();
  for (std::size_t t = 0; t < sel.size(); ++t) {
    out.scenarios.push_back(inst.scenarios[sel.indices[t]]);
    out.scenarios.back().prob = sel.weights[t];
  }
  out.cached_optimum.reset();
  return out;
}

// The network used for the training criteria.
nn::NetConfig acceptance_net() {
  nn::NetConfig c;
  c.low_hidden = c.low_out = c.high_hidden = c.embed = c.critic_hidden = 32;
  c.heads = 4;
  c.init_gain = 3.0;
  return c;
}

rl::TrainConfig acceptance_training(std::uint64_t seed, const std::string& ckpt_dir) {
  rl::TrainConfig t;
  t.k = 3;
  t.seed = seed;
  t.net = acceptance_net();
  t.reward.alpha = 0.5;
  t.reward.time_scale = 1e5;
  t.ppo.epochs = 4;
  t.ppo.env_count = 16;
  t.ppo.minibatch = 16;
  t.ppo.update_epochs = 10;
  t.ppo.lr_actor = t.ppo.lr_critic = 1e-3;
  t.checkpoint_dir = ckpt_dir;
  return t;
}

// ---------------------------------------------------------------------------

Outcome solver_oracle() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  std::size_t feasible = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nb = 1 + rng.below(12);
    const std::size_t nc = rng.below(5);
    const std::size_t m = 2 + rng.below(5);
    const auto p = testutil::random_mixed_binary(rng, nb, nc, m);
    const double oracle = testutil::brute_force_binary(p);
    const auto r = mip::solve_mip(p);
    if (std::isinf(oracle)) {
      if (r.status != mip::Status::kInfeasible)
        return {false, "problem " + std::to_string(trial) + " is infeasible but solver says " + mip::to_string(r.status)};
      continue;
    }
    ++feasible;
    if (r.status != mip::Status::kOptimal)
      return {false, "problem " + std::to_string(trial) + ": status " + mip::to_string(r.status)};
    worst = std::max(worst, std::abs(r.objective - oracle));
  }
  const double secs = seconds_since(t0);
  const bool ok = worst <= 1e-6 && secs < 60.0;
  return {ok, "200 problems (" + std::to_string(feasible) + " feasible), max |diff| " + fmt(worst) + ", " +
                  fmt(secs, 3) + " s"};
}

Outcome gradient_gate() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t entries = 0;
  Rng rng(7);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = gen_cflp(2 + rng.below(2), 2 + rng.below(2), 3, derive_seed(500, s));
    auto cfg = testutil::small_net(s % 2 ? 3.0 : 1.0);
    const auto in = nn::prepare_instance(inst, cfg);
    const auto p = nn::init_params(cfg, derive_seed(600, s));
    std::vector<std::size_t> actions = {0, 1, 2};
    for (std::size_t i = 2; i > 0; --i) std::swap(actions[i], actions[rng.below(i + 1)]);
    actions.resize(2 + s % 2);
    const auto res = testutil::check_gradients(testutil::composite_loss(in, actions, rng.uniform(-3.0, 3.0)), p);
    worst = std::max(worst, res.max_rel_error);
    entries += res.entries;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 120.0,
          std::to_string(entries) + " parameter entries, max rel error " + fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

Outcome exact_at_full_k() {
  const auto t0 = Clock::now();
  // N = 10 keeps twenty full extensive forms inside the time budget.
  const auto set = cflp_set(20, 10, 31);
  const auto policy = nn::init_params(acceptance_net(), 3);
  double worst = 0.0;
  std::size_t evaluations = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& inst = set[i];
    const std::size_t n = inst.num_scenarios();
    const std::map<std::string, ReducedSelection> sels = {
        {"policy", rl::policy_selection(nn::prepare_instance(inst, policy.cfg), n, policy)},
        {"random", bench::baseline_random(n, n, i)},
        {"kmedoids", bench::baseline_kmedoids(inst, n)},
        {"valueSpace", bench::baseline_value_space(inst, n)}};
    // Identical selections give identical solves; solve each distinct one once.
    std::map<std::pair<std::vector<std::size_t>, std::vector<double>>, double> cache;
    for (const auto& [method, sel] : sels) {
      const auto key = std::make_pair(sel.indices, sel.weights);
      auto it = cache.find(key);
      if (it == cache.end()) {
        const auto r = bench::evaluate_selection(inst, sel);
        if (!r.ok()) return {false, method + " on instance " + std::to_string(i) + ": " + r.error};
        it = cache.emplace(key, r.error_pct).first;
        ++evaluations;
      }
      worst = std::max(worst, std::abs(it->second));
    }
  }
  return {worst <= 1e-4, "20 CFLP_5_10_10 instances x 4 methods (" + std::to_string(evaluations) +
                             " distinct solves), max |errorPct| " + fmt(worst) + ", " + fmt(seconds_since(t0), 3) +
                             " s"};
}

Outcome permutation_laws() {
  const auto t0 = Clock::now();
  Rng rng(99);
  double enc_diff = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = gen_cflp(5, 10, 30, derive_seed(700, s));
    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    SpInstance shuffled = inst;
    for (std::size_t i = 0; i < 30; ++i) shuffled.scenarios[i] = inst.scenarios[perm[i]];
    const auto p = nn::init_params(acceptance_net(), s);
    const auto a = nn::encode(nn::prepare_instance(inst, p.cfg), p);
    const auto b = nn::encode(nn::prepare_instance(shuffled, p.cfg), p);
    for (std::size_t i = 0; i < 30; ++i)
      for (std::size_t j = 0; j < a.H.cols(); ++j) enc_diff = std::max(enc_diff, std::abs(b.H(i, j) - a.H(perm[i], j)));
    for (std::size_t j = 0; j < a.hbar.size(); ++j) enc_diff = std::max(enc_diff, std::abs(a.hbar[j] - b.hbar[j]));
    enc_diff = std::max(enc_diff, std::abs(nn::critic_value(a, p) - nn::critic_value(b, p)));
  }

  // Reordering sel.indices on instances whose reduced problem has a unique
  // optimum, found by enumerating every first-stage point.
  std::size_t checked = 0;
  double err_diff = 0.0;
  for (std::uint64_t s = 0; checked < 10 && s < 40; ++s) {
    const auto inst = solved(gen_cflp(5, 10, 30, derive_seed(800, s)));
    const auto sel = bench::baseline_random(30, 3, s);
    const SpInstance red = reduced_instance(inst, sel);
    std::vector<double> values;
    for (std::uint32_t mask = 1; mask < 32; ++mask) {
      std::vector<double> x(5);
      for (std::size_t f = 0; f < 5; ++f) x[f] = (mask >> f) & 1 ? 1.0 : 0.0;
      try {
        values.push_back(evaluate_first_stage(red, x).f);
      } catch (const std::exception&) {
      }
    }
    std::sort(values.begin(), values.end());
    if (values.size() < 2 || values[1] - values[0] <= 1e-6 * std::abs(values[0])) continue;
    ++checked;
    std::vector<std::size_t> order = {0, 1, 2};
    const double base = bench::evaluate_selection(inst, sel).error_pct;
    do {
      ReducedSelection p;
      for (std::size_t t : order) {
        p.indices.push_back(sel.indices[t]);
        p.weights.push_back(sel.weights[t]);
      }
      const auto r = bench::evaluate_selection(inst, p);
      if (!r.ok()) return {false, "reordered evaluation failed: " + r.error};
      err_diff = std::max(err_diff, std::abs(r.error_pct - base));
    } while (std::next_permutation(order.begin(), order.end()));
  }
  const bool ok = enc_diff <= 1e-9 && err_diff <= 1e-9 && checked >= 10;
  return {ok, "encoder/critic max diff " + fmt(enc_diff) + " on 10 shuffled CFLP_5_10_30; errorPct max diff " +
                  fmt(err_diff) + " over all orders on " + std::to_string(checked) + " unique-optimum selections, " +
                  fmt(seconds_since(t0), 3) + " s"};
}

Outcome reward_law() {
  Rng rng(4);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    rl::RewardConfig cfg;
    cfg.alpha = rng.uniform(1e-6, 1.0 - 1e-6);
    cfg.node_weight = rng.uniform(0.0, 5.0);
    cfg.time_scale = rng.uniform(0.5, 1e3);
    mip::WorkMetric w;
    w.simplex_pivots = static_cast<std::int64_t>(rng.below(100000));
    w.bnb_nodes = static_cast<std::int64_t>(rng.below(1000));
    const double m = -rng.uniform(0.0, 30.0);
    const double t = (static_cast<double>(w.simplex_pivots) + cfg.node_weight * static_cast<double>(w.bnb_nodes)) /
                     cfg.time_scale;
    const double closed = -(1.0 - cfg.alpha) * t + cfg.alpha * m;
    const double r = rl::compute_reward(w, m, cfg);
    const double d = rng.uniform(1e-3, 10.0);
    if (r != closed) ++violations;
    if (!(rl::compute_reward(t + d, m, cfg) < rl::compute_reward(t, m, cfg))) ++violations;
    if (!(rl::compute_reward(t, m + d, cfg) > rl::compute_reward(t, m, cfg))) ++violations;
  }
  return {violations == 0, "1000 random (t, M, alpha) triples, " + std::to_string(violations) + " violations"};
}

Outcome discrepancy_law() {
  const auto t0 = Clock::now();
  double diag = 0.0, most_negative = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto d = bench::cost_space_discrepancy(gen_cflp(5, 10, 30, derive_seed(900, s))).d;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      diag = std::max(diag, std::abs(d(i, i)));
      for (std::size_t j = 0; j < d.cols(); ++j) most_negative = std::min(most_negative, d(i, j));
    }
  }
  // Medoid sets against every k-subset, N = 8.
  std::size_t cases = 0, mismatches = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = gen_cflp(5, 10, 8, derive_seed(950, s));
    const Matrix sym = bench::symmetrize(bench::cost_space_discrepancy(inst).d);
    for (std::size_t k = 1; k <= 3; ++k) {
      double best = std::numeric_limits<double>::infinity(), second = best;
      std::vector<std::size_t> arg;
      for (std::uint32_t mask = 0; mask < 256; ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
        std::vector<std::size_t> sub;
        for (std::size_t i = 0; i < 8; ++i)
          if (mask & (1u << i)) sub.push_back(i);
        double cost = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
          double m = std::numeric_limits<double>::infinity();
          for (std::size_t c : sub) m = std::min(m, sym(i, c));
          cost += m;
        }
        if (cost < best) {
          second = best;
          best = cost;
          arg = sub;
        } else {
          second = std::min(second, cost);
        }
      }
      auto got = bench::baseline_value_space(inst, k).indices;
      std::sort(got.begin(), got.end());
      ++cases;
      const double got_cost = bench::medoid_cost(sym, got);
      const bool unique = second - best > 1e-9 * std::max(1.0, std::abs(best));
      if (unique ? got != arg : std::abs(got_cost - best) > 1e-9 * std::max(1.0, std::abs(best))) ++mismatches;
    }
  }
  const bool ok = diag <= 1e-9 && most_negative >= -1e-6 && mismatches == 0;
  return {ok, "20 CFLP_5_10_30: max |d(i,i)| " + fmt(diag) + ", min d " + fmt(most_negative) + "; medoid oracle " +
                  std::to_string(cases - mismatches) + "/" + std::to_string(cases) + " (N=8, k<=3), " +
                  fmt(seconds_since(t0), 3) + " s"};
}

struct TrainedPolicies {
  std::vector<SpInstance> test;
  std::vector<nn::PolicyParams> best;
  double seconds = 0.0;
  std::string error;
};

TrainedPolicies train_smoke_policies() {
  TrainedPolicies out;
  const auto t0 = Clock::now();
  try {
    const auto train = cflp_set(64, 30, 1);
    const auto val = cflp_set(16, 30, 2);
    out.test = cflp_set(16, 30, 3);
    const nn::NetConfig net = acceptance_net();
    const fs::path dir = fs::temp_directory_path() / "scenred_acceptance_ckpt";
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const fs::path sd = dir / std::to_string(seed);
      fs::remove_all(sd);
      rl::train(train, val, acceptance_training(seed, sd.string()));
      out.best.push_back(nn::load_checkpoint((sd / "best.json").string(), &net));
    }
    fs::remove_all(dir);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.seconds = seconds_since(t0);
  return out;
}

Outcome training_smoke(const TrainedPolicies& tp) {
  if (!tp.error.empty()) return {false, "training failed: " + tp.error};
  const auto t0 = Clock::now();
  double policy = 0.0, random = 0.0;
  std::size_t failures = 0;
  for (std::size_t s = 0; s < tp.best.size(); ++s) {
    for (std::size_t i = 0; i < tp.test.size(); ++i) {
      const auto& inst = tp.test[i];
      const auto pr = bench::evaluate_selection(
          inst, rl::policy_selection(nn::prepare_instance(inst, tp.best[s].cfg), 3, tp.best[s]));
      const auto rr = bench::evaluate_selection(inst, bench::baseline_random(30, 3, derive_seed(s, i)));
      if (!pr.ok() || !rr.ok()) {
        ++failures;
        continue;
      }
      policy += pr.error_pct;
      random += rr.error_pct;
    }
  }
  const double n = static_cast<double>(tp.best.size() * tp.test.size());
  policy /= n;
  random /= n;
  const double total = tp.seconds + seconds_since(t0);
  const bool ok = failures == 0 && policy <= random && total <= 1800.0;
  return {ok, "policy mean errorPct " + fmt(policy) + " vs random " + fmt(random) + " (5 seeds x 16 held-out, k=3), " +
                  std::to_string(failures) + " failed evaluations, " + fmt(total, 4) + " s"};
}

Outcome ordering_effect(const TrainedPolicies& tp) {
  if (!tp.error.empty()) return {false, "training failed: " + tp.error};
  const auto t0 = Clock::now();
  double pooled = 0.0;
  for (std::size_t s = 0; s < tp.best.size(); ++s)
    for (std::size_t i = 0; i < tp.test.size(); ++i) {
      const auto& inst = tp.test[i];
      const auto sel = rl::policy_selection(nn::prepare_instance(inst, tp.best[s].cfg), 3, tp.best[s]);
      pooled += bench::order_cdf_experiment(inst, sel, 50, derive_seed(1000 + s, i)).percentile;
    }
  pooled /= static_cast<double>(tp.best.size() * tp.test.size());
  return {pooled < 0.5, "pooled percentile " + fmt(pooled) + " against 50 shuffles per instance, 5 seeds, " +
                            fmt(seconds_since(t0), 3) + " s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "scenred_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  cli::RunConfig c;
  c.problem.facilities = 3;
  c.problem.customers = 5;
  c.problem.scenarios = 6;
  c.dataset = {6, 2, 3};
  c.k = 2;
  c.seed = 17;
  c.net.low_hidden = c.net.low_out = c.net.high_hidden = c.net.embed = c.net.critic_hidden = 8;
  c.net.heads = 2;
  c.net.init_gain = 3.0;
  c.reward.alpha = 0.5;
  c.ppo.env_count = 3;
  c.ppo.minibatch = 3;
  c.ppo.update_epochs = 2;
  c.training.max_updates = 2;
  c.eval.seeds = 2;
  c.paths.dataset = (root / "data").string();
  c.paths.checkpoints = (root / "ckpt").string();
  c.paths.reports = (root / "reports").string();
  const fs::path cfg_path = root / "config.json";
  std::ofstream(cfg_path) << cli::to_json(c).dump(1);

  const std::string bin = SCENRED_CLI_PATH;
  const std::string tail = " --config " + cfg_path.string() + " > " + (root / "log.txt").string() + " 2>&1";
  auto run_once = [&]() -> std::map<std::string, std::string> {
    for (const char* d : {"data", "ckpt", "reports"}) fs::remove_all(root / d);
    for (const std::string cmd : {"generate", "train"})
      if (std::system((bin + " " + cmd + tail).c_str()) != 0) return {};
    const std::string eval =
        bin + " evaluate --checkpoint " + (fs::path(c.paths.checkpoints) / "final.json").string() + tail;
    if (std::system(eval.c_str()) != 0) return {};
    std::map<std::string, std::string> files;
    for (const char* d : {"data", "ckpt", "reports"})
      for (const auto& e : fs::directory_iterator(root / d))
        files[std::string(d) + "/" + e.path().filename().string()] = slurp(e.path());
    return files;
  };
  const auto a = run_once();
  const auto b = run_once();
  fs::remove_all(root);
  if (a.empty() || b.empty()) return {false, "a command failed"};
  std::size_t csv = 0, ckpt = 0;
  for (const auto& [name, _] : a) {
    if (name.ends_with(".csv")) ++csv;
    if (name.starts_with("ckpt/")) ++ckpt;
  }
  const bool ok = a == b && csv >= 2 && ckpt >= 2;
  return {ok, std::to_string(a.size()) + " artifacts (" + std::to_string(csv) + " CSV, " + std::to_string(ckpt) +
                  " checkpoints) " + (a == b ? "byte-identical" : "differ") + " across two CLI runs"};
}

Outcome size_identities() {
  std::size_t ndp_ok = 0, checked = 0, bad = 0;
  for (std::uint64_t s = 0; s < 3; ++s)
    if (gen_ndp(2, 2, 10, 1, s).n1() == 178) ++ndp_ok;
  std::vector<SpInstance> insts;
  for (std::uint64_t s = 0; s < 5; ++s) {
    insts.push_back(gen_cflp(5, 10, 30, s));
    insts.push_back(gen_cflp(10, 20, 3 + s, s));
    insts.push_back(gen_ndp(2, 2, 4, 20, s));
    insts.push_back(gen_ndp(2, 2, 10, 2 + s, s));
  }
  for (const auto& inst : insts) {
    const auto ef = build_extensive_form(inst);
    const std::size_t n = inst.num_scenarios();
    ++checked;
    if (ef.num_vars() != inst.n1() + n * inst.n2() || ef.num_rows() != inst.m1() + n * inst.m2()) ++bad;
  }
  return {ndp_ok == 3 && bad == 0, "NDP_2_2_10 has 178 first-stage variables (" + std::to_string(ndp_ok) +
                                       "/3 seeds); EF dimensions match on " + std::to_string(checked - bad) + "/" +
                                       std::to_string(checked) + " instances"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> early = {
      {"solver oracle equivalence", solver_oracle},
      {"gradient gate", gradient_gate},
      {"exactness at k=N", exact_at_full_k},
      {"permutation laws", permutation_laws},
      {"reward law", reward_law},
      {"discrepancy law", discrepancy_law},
  };
  int failed = 0;
  int index = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& fn) {
    ++index;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << index << " " << name << ": " << o.detail << std::endl;
  };
  for (const auto& [name, fn] : early) report(name, fn);
  const TrainedPolicies tp = train_smoke_policies();
  report("training smoke", [&] { return training_smoke(tp); });
  report("ordering effect", [&] { return ordering_effect(tp); });
  report("determinism", determinism);
  report("size identities", size_identities);
  return failed == 0 ? 0 : 1;
}
