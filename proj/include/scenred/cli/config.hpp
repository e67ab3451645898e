#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenred/core/io.hpp"
#include "scenred/core/types.hpp"
#include "scenred/mip/problem.hpp"
#include "scenred/nn/params.hpp"
#include "scenred/rl/env.hpp"
#include "scenred/rl/ppo.hpp"
#include "scenred/rl/train.hpp"

namespace scenred::cli {

using Json = nlohmann::json;

// Problem failures that are the caller's fault (bad flags, bad config).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemConfig {
  std::string family = "cflp";
  std::size_t facilities = 5;  // cflp
  std::size_t customers = 10;  // cflp
  std::size_t sources = 2;     // ndp
  std::size_t sinks = 2;       // ndp
  std::size_t intermediates = 4;
  std::size_t scenarios = 30;
  friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

struct DatasetConfig {
  std::size_t train = 64;
  std::size_t validation = 16;
  std::size_t test = 16;
  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct SolverConfig {
  std::int64_t node_limit = 200000;
  double feasibility = 1e-6;
  double integrality = 1e-6;
  double gap = 1e-6;
  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;

  mip::SolverOptions options() const {
    mip::SolverOptions o;
    o.node_limit = node_limit;
    o.tol.feasibility = feasibility;
    o.tol.integrality = integrality;
    o.tol.gap = gap;
    return o;
  }
};

struct TrainingConfig {
  std::size_t max_updates = 0;
  std::size_t checkpoint_every = 0;
  bool normalize_rewards = false;
  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct EvalConfig {
  std::size_t seeds = 5;     // evaluation seeds per (instance, method)
  std::size_t shuffles = 50;  // order-cdf permutations per instance
  std::vector<std::string> methods = {"policy", "random", "kmedoids", "valueSpace"};
  bool record_wall_time = false;
  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct PathConfig {
  std::string dataset = "data";
  std::string checkpoints = "checkpoints";
  std::string reports = "reports";
  friend bool operator==(const PathConfig&, const PathConfig&) = default;
};

struct RunConfig {
  ProblemConfig problem;
  DatasetConfig dataset;
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  rl::RewardConfig reward;
  rl::PpoConfig ppo;
  nn::NetConfig net;
  SolverConfig solver;
  TrainingConfig training;
  EvalConfig eval;
  PathConfig paths;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ProblemConfig, family, facilities, customers, sources, sinks,
                                                intermediates, scenarios)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DatasetConfig, train, validation, test)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SolverConfig, node_limit, feasibility, integrality, gap)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainingConfig, max_updates, checkpoint_every, normalize_rewards)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalConfig, seeds, shuffles, methods, record_wall_time)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PathConfig, dataset, checkpoints, reports)

}  // namespace scenred::cli

namespace scenred::rl {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RewardConfig, alpha, node_weight, time_scale, failure_reward)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PpoConfig, lr_actor, lr_critic, clip, gae_lambda, vf_coef, minibatch,
                                                update_epochs, env_count, epochs, entropy_coef, weight_decay,
                                                max_grad_norm, normalize_advantages, shuffle, adam_beta1, adam_beta2,
                                                adam_eps)
}  // namespace scenred::rl

namespace scenred::cli {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, problem, dataset, k, seed, threads, reward, ppo, net,
                                                solver, training, eval, paths)

inline void validate(const RunConfig& c) {
  if (c.problem.family != "cflp" && c.problem.family != "ndp")
    throw UsageError("config: problem.family must be 'cflp' or 'ndp', got '" + c.problem.family + "'");
  if (c.problem.scenarios < 1) throw UsageError("config: problem.scenarios must be at least 1");
  if (c.k < 1 || c.k > c.problem.scenarios)
    throw UsageError("config: k=" + std::to_string(c.k) + " must lie in [1, " + std::to_string(c.problem.scenarios) +
                     "]");
  if (c.threads < 1) throw UsageError("config: threads must be at least 1");
  if (c.solver.node_limit < 1) throw UsageError("config: solver.node_limit must be positive");
  if (c.eval.seeds < 1) throw UsageError("config: eval.seeds must be at least 1");
  if (c.eval.shuffles < 1) throw UsageError("config: eval.shuffles must be at least 1");
  for (const auto& m : c.eval.methods)
    if (m != "policy" && m != "random" && m != "kmedoids" && m != "valueSpace")
      throw UsageError("config: unknown evaluation method '" + m + "'");
  try {
    c.reward.validate();
    c.ppo.validate();
    c.net.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

inline Json to_json(const RunConfig& c) {
  Json j = c;
  return j;
}

// Canonical one-line form echoed into artifacts.
inline std::string config_echo(const RunConfig& c) { return to_json(c).dump(); }

inline std::string env_name(const std::string& path) {
  std::string s = "SCENRED_";
  for (char ch : path) s += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

namespace detail {

inline void collect_scalars(const Json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      collect_scalars(*it, path, out);
    else if (it->is_primitive())
      out.push_back(path);
  }
}

inline Json parse_like(const Json& like, const std::string& text, const std::string& var) {
  try {
    if (like.is_boolean()) {
      if (text == "1" || text == "true") return true;
      if (text == "0" || text == "false") return false;
      throw std::invalid_argument("not a boolean");
    }
    std::size_t used = 0;
    if (like.is_number_unsigned()) {
      if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
      const unsigned long long v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    if (like.is_number_integer()) {
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    if (like.is_number_float()) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    }
    return text;
  } catch (const std::exception& e) {
    throw UsageError(var + "='" + text + "' is not a valid value (" + e.what() + ")");
  }
}

}  // namespace detail

// Overrides every scalar field whose SCENRED_<PATH> variable is set, e.g.
// SCENRED_REWARD_ALPHA or SCENRED_PPO_EPOCHS.
inline RunConfig apply_env_overrides(const RunConfig& c,
                                     const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  Json j = to_json(c);
  std::vector<std::string> paths;
  detail::collect_scalars(j, "", paths);
  for (const auto& path : paths) {
    const std::string var = env_name(path);
    const char* v = getenv_fn(var.c_str());
    if (!v) continue;
    const Json::json_pointer ptr("/" + [&] {
      std::string p = path;
      std::replace(p.begin(), p.end(), '.', '/');
      return p;
    }());
    j[ptr] = detail::parse_like(j[ptr], v, var);
  }
  try {
    return j.get<RunConfig>();
  } catch (const Json::exception& e) {
    throw UsageError(std::string("environment override: ") + e.what());
  }
}

inline RunConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw UsageError("config: top level must be an object");
  try {
    return j.get<RunConfig>();
  } catch (const Json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

// File (if any) over defaults, then environment overrides. Command-line
// flags are applied by the caller afterwards.
inline RunConfig load_config(const std::string& path,
                             const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  RunConfig c;
  if (!path.empty()) {
    Json j;
    try {
      j = read_json_file(path);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    c = config_from_json(j);
  }
  return apply_env_overrides(c, getenv_fn);
}

inline rl::TrainConfig train_config(const RunConfig& c) {
  rl::TrainConfig t;
  t.k = c.k;
  t.seed = c.seed;
  t.threads = c.threads;
  t.reward = c.reward;
  t.ppo = c.ppo;
  t.net = c.net;
  t.solver = c.solver.options();
  t.max_updates = c.training.max_updates;
  t.checkpoint_every = c.training.checkpoint_every;
  t.checkpoint_dir = c.paths.checkpoints;
  t.normalize_rewards = c.training.normalize_rewards;
  return t;
}

}  // namespace scenred::cli
