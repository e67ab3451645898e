#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/bench/evaluate.hpp"
#include "scenred/bench/report.hpp"
#include "scenred/nn/params.hpp"
#include "scenred/nn/policy.hpp"
#include "scenred/parallel.hpp"
#include "scenred/rl/env.hpp"
#include "scenred/rl/ppo.hpp"
#include "scenred/rng.hpp"

namespace scenred::rl {

struct TrainConfig {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  RewardConfig reward;
  PpoConfig ppo;
  nn::NetConfig net;
  mip::SolverOptions solver;
  std::size_t max_updates = 0;       // 0 = run all epochs
  std::size_t checkpoint_every = 0;  // in updates; 0 = final checkpoint only
  std::string checkpoint_dir;        // empty = no checkpoint files
  bool normalize_rewards = false;
};

// Welford running statistics of raw rewards.
struct RunningStats {
  double count = 0.0, mean = 0.0, m2 = 0.0;
  void add(double x) {
    count += 1.0;
    const double d = x - mean;
    mean += d / count;
    m2 += d * (x - mean);
  }
  double stddev() const { return count > 1.0 ? std::sqrt(m2 / (count - 1.0)) : 1.0; }
};

struct UpdateMetrics {
  std::size_t update = 0;
  std::size_t epoch = 0;
  double mean_reward = 0.0;
  double mean_distance = 0.0;  // mean -M over successful rollouts
  double mean_time = 0.0;
  std::size_t failures = 0;
  PpoStats stats;
  // Filled on the last update of an epoch when a validation set is given.
  std::optional<double> validation_error;
};

inline const char* kMetricsHeader =
    "update,epoch,meanReward,meanDistance,meanTime,failures,policyLoss,valueLoss,entropy,clipFraction,approxKl,"
    "validationErrorPct";

inline void write_metrics_row(std::ostream& os, const UpdateMetrics& m) {
  using bench::num;
  os << m.update << ',' << m.epoch << ',' << num(m.mean_reward) << ',' << num(m.mean_distance) << ','
     << num(m.mean_time) << ',' << m.failures << ',' << num(m.stats.policy_loss) << ',' << num(m.stats.value_loss)
     << ',' << num(m.stats.entropy) << ',' << num(m.stats.clip_fraction) << ',' << num(m.stats.approx_kl) << ','
     << (m.validation_error ? num(*m.validation_error) : "") << "\n";
}

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<nn::GraphInput> prepare_all(const std::vector<SpInstance>& set, const nn::NetConfig& net,
                                               std::size_t threads) {
  std::vector<nn::GraphInput> out(set.size());
  parallel_for(set.size(), threads, [&](std::size_t i) { out[i] = nn::prepare_instance(set[i], net); });
  return out;
}

// Greedy selection of k scenarios by the policy.
inline ReducedSelection policy_selection(const nn::GraphInput& in, std::size_t k, const nn::PolicyParams& p) {
  const auto enc = nn::encode(in, p);
  return ReducedSelection::uniform(nn::decode_sequence(enc, k, nn::DecodeMode::kGreedy, nullptr, p).indices);
}

// Mean errorPct of greedy selections; failed evaluations count as the
// largest error seen (or 100 when none succeeded).
inline double validation_error(const std::vector<SpInstance>& set, const std::vector<nn::GraphInput>& inputs,
                               const nn::PolicyParams& p, std::size_t k, const mip::SolverOptions& solver,
                               std::size_t threads) {
  std::vector<double> err(set.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(set.size(), threads, [&](std::size_t i) {
    const auto r = bench::evaluate_selection(set[i], policy_selection(inputs[i], k, p), {solver, false});
    if (r.ok()) err[i] = r.error_pct;
  });
  double worst = 0.0;
  bool any = false;
  for (double e : err)
    if (!std::isnan(e)) {
      worst = any ? std::max(worst, e) : e;
      any = true;
    }
  if (!any) worst = 100.0;
  double s = 0.0;
  for (double e : err) s += std::isnan(e) ? worst : e;
  return s / static_cast<double>(set.size());
}

struct TrainResult {
  nn::PolicyParams params;
  std::vector<UpdateMetrics> metrics;
  std::optional<double> best_validation_error;
  std::size_t updates = 0;
};

inline std::string checkpoint_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// Rollout/update loop: each epoch visits the training set in a shuffled
// order, env_count instances per update. All randomness derives from
// cfg.seed. metrics_out (if given) receives one CSV row per update.
inline TrainResult train(const std::vector<SpInstance>& train_set, const std::vector<SpInstance>& validation_set,
                         const TrainConfig& cfg, std::ostream* metrics_out = nullptr,
                         const nlohmann::json& config_echo = {}) {
  cfg.ppo.validate();
  cfg.reward.validate();
  cfg.net.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (cfg.ppo.env_count < 1) throw std::invalid_argument("train: env_count must be at least 1");
  for (const auto& inst : train_set)
    if (cfg.k > inst.num_scenarios())
      throw std::invalid_argument("train: k=" + std::to_string(cfg.k) + " exceeds the scenario count");

  TrainResult out;
  out.params = nn::init_params(cfg.net, derive_seed(cfg.seed, 0));
  const auto inputs = prepare_all(train_set, cfg.net, cfg.threads);
  const auto val_inputs = prepare_all(validation_set, cfg.net, cfg.threads);
  Adam opt;
  Rng order_rng(derive_seed(cfg.seed, 1));
  Rng update_rng(derive_seed(cfg.seed, 2));
  const std::uint64_t rollout_base = derive_seed(cfg.seed, 3);
  RunningStats reward_stats;

  const bool write_ckpt = !cfg.checkpoint_dir.empty();
  if (write_ckpt) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    nn::save_checkpoint(checkpoint_path(cfg.checkpoint_dir, "initial.json"), out.params, config_echo);
  }
  if (metrics_out) {
    bench::write_config_line(*metrics_out, config_echo.is_null() ? std::string() : config_echo.dump());
    *metrics_out << kMetricsHeader << "\n";
  }

  bool done = cfg.max_updates > 0 && out.updates >= cfg.max_updates;
  for (std::size_t epoch = 0; epoch < cfg.ppo.epochs && !done; ++epoch) {
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size() && !done; start += cfg.ppo.env_count) {
      const std::size_t end = std::min(order.size(), start + cfg.ppo.env_count);
      std::vector<const SpInstance*> batch;
      std::vector<const nn::GraphInput*> batch_in;
      std::vector<std::size_t> ids;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train_set[order[i]]);
        batch_in.push_back(&inputs[order[i]]);
        ids.push_back(order[i]);
      }
      auto exp = rollout(out.params, batch, batch_in, ids, cfg.k, derive_seed(rollout_base, out.updates), cfg.reward,
                         cfg.solver, cfg.threads);

      UpdateMetrics m;
      m.update = out.updates;
      m.epoch = epoch;
      std::size_t ok = 0;
      for (const auto& e : exp) {
        m.mean_reward += e.reward;
        if (e.failed) {
          ++m.failures;
          continue;
        }
        ++ok;
        m.mean_distance -= e.match;
        m.mean_time += e.time;
        if (cfg.normalize_rewards) reward_stats.add(e.reward);
      }
      m.mean_reward /= static_cast<double>(exp.size());
      if (ok) {
        m.mean_distance /= static_cast<double>(ok);
        m.mean_time /= static_cast<double>(ok);
      }
      if (cfg.normalize_rewards) {
        const double sd = std::max(reward_stats.stddev(), 1e-8);
        for (auto& e : exp) {
          e.ret = e.reward / sd;
          e.advantage = e.ret - e.value;
        }
      }

      const nn::PolicyParams before = out.params;
      const Adam opt_before = opt;
      try {
        m.stats = ppo_update(out.params, opt, exp, batch_in, cfg.ppo, update_rng);
      } catch (const std::runtime_error& ex) {
        out.params = before;
        opt = opt_before;
        throw TrainingAborted(std::string(ex.what()) + " at update " + std::to_string(out.updates));
      }
      ++out.updates;
      done = cfg.max_updates > 0 && out.updates >= cfg.max_updates;
      const bool epoch_end = end == order.size() || done;
      if (epoch_end && !validation_set.empty()) {
        m.validation_error = validation_error(validation_set, val_inputs, out.params, cfg.k, cfg.solver, cfg.threads);
        if (!out.best_validation_error || *m.validation_error < *out.best_validation_error) {
          out.best_validation_error = m.validation_error;
          if (write_ckpt) nn::save_checkpoint(checkpoint_path(cfg.checkpoint_dir, "best.json"), out.params, config_echo);
        }
      }
      if (write_ckpt && cfg.checkpoint_every > 0 && out.updates % cfg.checkpoint_every == 0)
        nn::save_checkpoint(checkpoint_path(cfg.checkpoint_dir, "update_" + std::to_string(out.updates) + ".json"),
                            out.params, config_echo);
      if (metrics_out) write_metrics_row(*metrics_out, m);
      out.metrics.push_back(std::move(m));
    }
  }
  if (write_ckpt && out.updates > 0)
    nn::save_checkpoint(checkpoint_path(cfg.checkpoint_dir, "final.json"), out.params, config_echo);
  return out;
}

}  // namespace scenred::rl
