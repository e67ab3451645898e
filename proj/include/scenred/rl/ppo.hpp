#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenred/core/types.hpp"
#include "scenred/nn/policy.hpp"
#include "scenred/parallel.hpp"
#include "scenred/rl/env.hpp"
#include "scenred/rng.hpp"

namespace scenred::rl {

struct Experience {
  std::size_t instance_id = 0;
  std::vector<std::size_t> actions;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
  // Diagnostics of the environment step.
  double match = 0.0;
  double time = 0.0;
  bool failed = false;
  std::string error;

  friend bool operator==(const Experience&, const Experience&) = default;
};

struct PpoConfig {
  double lr_actor = 2.5e-4;
  double lr_critic = 2.5e-4;
  double clip = 0.2;
  double gae_lambda = 0.95;  // inert for single-step episodes
  double vf_coef = 0.5;
  std::size_t minibatch = 16;
  std::size_t update_epochs = 10;
  std::size_t env_count = 16;
  std::size_t epochs = 10;
  double entropy_coef = 0.01;
  double weight_decay = 1e-4;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  bool normalize_advantages = true;
  bool shuffle = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-5;

  void validate() const {
    if (!(clip > 0.0)) throw std::invalid_argument("PpoConfig: clip must be positive");
    if (minibatch < 1) throw std::invalid_argument("PpoConfig: minibatch must be at least 1");
    if (lr_actor < 0.0 || lr_critic < 0.0) throw std::invalid_argument("PpoConfig: negative learning rate");
  }
  friend bool operator==(const PpoConfig&, const PpoConfig&) = default;
};

// Adam with decoupled weight decay.
struct Adam {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;

  void step_params(nn::PolicyParams& p, const nn::Gradients& g, const PpoConfig& cfg) {
    if (m.empty()) {
      for (const auto& x : p.values) {
        m.emplace_back(x.rows(), x.cols());
        v.emplace_back(x.rows(), x.cols());
      }
    }
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double lr = nn::is_critic_param(p.names[i]) ? cfg.lr_critic : cfg.lr_actor;
      auto& w = p.values[i].data();
      const auto& gi = g.values[i].data();
      auto& mi = m[i].data();
      auto& vi = v[i].data();
      for (std::size_t k = 0; k < w.size(); ++k) {
        mi[k] = cfg.adam_beta1 * mi[k] + (1.0 - cfg.adam_beta1) * gi[k];
        vi[k] = cfg.adam_beta2 * vi[k] + (1.0 - cfg.adam_beta2) * gi[k] * gi[k];
        w[k] -= lr * ((mi[k] / bc1) / (std::sqrt(vi[k] / bc2) + cfg.adam_eps) + cfg.weight_decay * w[k]);
      }
    }
  }
};

// One rollout per instance: encode, sample an ordered selection, solve the
// reduced problem, and value the state. Instance i draws from the stream
// derive_seed(seed, i), so the result does not depend on thread count.
// Failures of single instances are recorded, not thrown.
inline std::vector<Experience> rollout(const nn::PolicyParams& policy, const std::vector<const SpInstance*>& batch,
                                       const std::vector<const nn::GraphInput*>& inputs,
                                       const std::vector<std::size_t>& instance_ids, std::size_t k, std::uint64_t seed,
                                       const RewardConfig& reward, const mip::SolverOptions& solver,
                                       std::size_t threads = 1) {
  if (batch.size() != inputs.size() || batch.size() != instance_ids.size())
    throw std::invalid_argument("rollout: batch, inputs and ids differ in length");
  std::vector<Experience> out(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    Experience& e = out[i];
    e.instance_id = instance_ids[i];
    try {
      const auto enc = nn::encode(*inputs[i], policy);
      Rng rng(derive_seed(seed, i));
      const auto tr = nn::decode_sequence(enc, k, nn::DecodeMode::kSample, &rng, policy);
      e.actions = tr.indices;
      e.log_prob = std::accumulate(tr.log_probs.begin(), tr.log_probs.end(), 0.0);
      e.value = nn::critic_value(enc, policy);
      const auto res = env_step(*batch[i], e.actions, reward, solver);
      e.reward = res.reward;
      e.match = res.diag.match;
      e.time = res.diag.time;
      e.failed = !res.diag.has_solution;
    } catch (const std::exception& ex) {
      e.failed = true;
      e.error = ex.what();
      e.reward = reward.failure_reward;
    }
    e.ret = e.reward;
    e.advantage = e.reward - e.value;
  });
  return out;
}

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  std::size_t minibatches = 0;
};

// Surrogate objective terms of one minibatch, built on a tape. Returns the
// scalar loss; accumulates statistics into stats.
inline nn::Var ppo_minibatch_loss(nn::Tape& t, const nn::ParamVars& pv, const std::vector<const Experience*>& mb,
                                  const std::vector<const nn::GraphInput*>& inputs, const PpoConfig& cfg,
                                  PpoStats* stats = nullptr) {
  const std::size_t b = mb.size();
  std::vector<double> adv(b);
  for (std::size_t i = 0; i < b; ++i) adv[i] = mb[i]->advantage;
  if (cfg.normalize_advantages && b > 1) {
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(b);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(b - 1));
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }
  std::vector<nn::Var> pg, vl, ent;
  for (std::size_t i = 0; i < b; ++i) {
    const auto e = nn::encode(t, *inputs[i], pv);
    const auto d = nn::decode_actions(t, e, mb[i]->actions, pv);
    const auto v = nn::critic_value(t, e, pv);
    const nn::Var log_ratio = t.add_scalar(d.log_prob_sum, -mb[i]->log_prob);
    const nn::Var ratio = t.exp(log_ratio);
    const nn::Var s1 = t.scale(ratio, adv[i]);
    const nn::Var s2 = t.scale(t.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), adv[i]);
    pg.push_back(t.scale(t.minimum(s1, s2), -1.0));
    vl.push_back(t.square(t.add_scalar(v, -mb[i]->ret)));
    ent.push_back(d.entropy_sum);
    if (stats) {
      const double r = t.scalar(ratio);
      const double lr = t.scalar(log_ratio);
      stats->clip_fraction += std::abs(r - 1.0) > cfg.clip ? 1.0 : 0.0;
      stats->approx_kl += (r - 1.0) - lr;
    }
  }
  const nn::Var policy_loss = t.mean(t.concat_cols(pg));
  const nn::Var value_loss = t.mean(t.concat_cols(vl));
  const nn::Var entropy = t.mean(t.concat_cols(ent));
  if (stats) {
    stats->policy_loss += t.scalar(policy_loss);
    stats->value_loss += t.scalar(value_loss);
    stats->entropy += t.scalar(entropy);
  }
  return t.add(t.add(policy_loss, t.scale(value_loss, cfg.vf_coef)), t.scale(entropy, -cfg.entropy_coef));
}

inline void clip_gradients(nn::Gradients& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = g.norm();
  if (n <= max_norm) return;
  const double s = max_norm / (n + 1e-6);
  for (auto& m : g.values)
    for (double& v : m.data()) v *= s;
}

// update_epochs passes over shuffled minibatches with one optimizer step per
// minibatch. inputs[i] is the graph of batch[i]. Failed rollouts are skipped.
inline PpoStats ppo_update(nn::PolicyParams& p, Adam& opt, const std::vector<Experience>& batch,
                           const std::vector<const nn::GraphInput*>& inputs, const PpoConfig& cfg, Rng& rng) {
  cfg.validate();
  if (batch.empty()) throw std::invalid_argument("ppo_update: empty batch");
  if (inputs.size() != batch.size()) throw std::invalid_argument("ppo_update: inputs and batch differ in length");
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (!batch[i].failed) usable.push_back(i);
  PpoStats stats;
  if (usable.empty()) return stats;
  std::size_t samples = 0;
  for (std::size_t epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    std::vector<std::size_t> order = usable;
    if (cfg.shuffle) rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.minibatch) {
      const std::size_t end = std::min(order.size(), start + cfg.minibatch);
      std::vector<const Experience*> mb;
      std::vector<const nn::GraphInput*> mb_in;
      for (std::size_t i = start; i < end; ++i) {
        mb.push_back(&batch[order[i]]);
        mb_in.push_back(inputs[order[i]]);
      }
      PpoStats local;
      double loss = 0.0;
      auto g = nn::grad([&](nn::Tape& t, const nn::ParamVars& pv) { return ppo_minibatch_loss(t, pv, mb, mb_in, cfg, &local); },
                        p, &loss);
      if (!std::isfinite(loss) || !std::isfinite(g.norm()))
        throw std::runtime_error("ppo_update: non-finite loss in minibatch " + std::to_string(stats.minibatches) +
                                 " of update epoch " + std::to_string(epoch));
      clip_gradients(g, cfg.max_grad_norm);
      opt.step_params(p, g, cfg);
      stats.policy_loss += local.policy_loss;
      stats.value_loss += local.value_loss;
      stats.entropy += local.entropy;
      stats.clip_fraction += local.clip_fraction;
      stats.approx_kl += local.approx_kl;
      samples += mb.size();
      stats.minibatches += 1;
    }
  }
  const double nb = static_cast<double>(stats.minibatches);
  stats.policy_loss /= nb;
  stats.value_loss /= nb;
  stats.entropy /= nb;
  stats.clip_fraction /= static_cast<double>(samples);
  stats.approx_kl /= static_cast<double>(samples);
  return stats;
}

}  // namespace scenred::rl
