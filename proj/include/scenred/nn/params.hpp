#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenred/graphs/graph.hpp"
#include "scenred/matrix.hpp"
#include "scenred/rng.hpp"

namespace scenred::nn {

struct NetConfig {
  std::size_t input_features = graphs::kNodeFeatures;
  std::size_t low_hidden = 64;    // H
  std::size_t low_out = 64;       // F1
  std::size_t high_hidden = 128;  // H2
  std::size_t embed = 128;        // F'
  std::size_t heads = 8;
  std::size_t critic_hidden = 64;
  // Initial weights are uniform on +-init_gain / sqrt(fan_in).
  double init_gain = 1.0;
  // Instance-graph messages use cosines of scenario vectors centered and
  // scaled per coordinate across the instance (see graphs).
  bool centered_similarity = true;

  void validate() const {
    if (input_features == 0 || low_hidden == 0 || low_out == 0 || high_hidden == 0 || embed == 0 || critic_hidden == 0)
      throw std::invalid_argument("NetConfig: widths must be positive");
    if (heads == 0 || embed % heads != 0)
      throw std::invalid_argument("NetConfig: embed width " + std::to_string(embed) + " is not divisible by " +
                                  std::to_string(heads) + " heads");
    if (!(init_gain > 0.0)) throw std::invalid_argument("NetConfig: init_gain must be positive");
  }
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NetConfig, input_features, low_hidden, low_out, high_hidden, embed,
                                                heads, critic_hidden, init_gain, centered_similarity)

// Named parameter matrices of the encoder, decoder and critic.
struct PolicyParams {
  NetConfig cfg;
  std::vector<std::string> names;
  std::vector<Matrix> values;

  std::size_t size() const { return values.size(); }

  std::size_t index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw std::invalid_argument("PolicyParams: no parameter named '" + name + "'");
  }
  Matrix& operator[](const std::string& name) { return values[index(name)]; }
  const Matrix& operator[](const std::string& name) const { return values[index(name)]; }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& m : values) n += m.size();
    return n;
  }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

struct ParamSpec {
  const char* name;
  std::size_t rows;
  std::size_t cols;
  std::size_t fan_in;
};

inline std::vector<ParamSpec> param_specs(const NetConfig& c) {
  const std::size_t e = c.embed;
  return {
      {"gcn.W0", c.input_features, c.low_hidden, c.input_features},
      {"gcn.W1", c.low_hidden, c.low_out, c.low_hidden},
      {"gcn.W2", c.low_out, c.high_hidden, c.low_out},
      {"gcn.W3", c.high_hidden, e, c.high_hidden},
      {"dec.vf", 1, e, e},
      {"dec.Wq", 3 * e, e, 3 * e},
      {"dec.Wk", e, e, e},
      {"dec.Wv", e, e, e},
      {"dec.Wo", e, e, e},
      {"dec.Wl", e, e, e},
      {"critic.Wq", e, e, e},
      {"critic.Wk", e, e, e},
      {"critic.Wv", e, e, e},
      {"critic.W1", e, c.critic_hidden, e},
      {"critic.b1", 1, c.critic_hidden, e},
      {"critic.W2", c.critic_hidden, 1, c.critic_hidden},
      {"critic.b2", 1, 1, c.critic_hidden},
  };
}

// Uniform on [-g/sqrt(fan_in), g/sqrt(fan_in)] with g = init_gain, in
// declaration order.
inline PolicyParams init_params(const NetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  PolicyParams p;
  p.cfg = cfg;
  Rng rng(seed);
  for (const auto& s : param_specs(cfg)) {
    const double bound = cfg.init_gain / std::sqrt(static_cast<double>(s.fan_in));
    Matrix m(s.rows, s.cols);
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
    p.names.emplace_back(s.name);
    p.values.push_back(std::move(m));
  }
  return p;
}

inline bool is_critic_param(const std::string& name) { return name.rfind("critic.", 0) == 0; }

// Gradient store aligned with PolicyParams::values.
struct Gradients {
  std::vector<Matrix> values;

  static Gradients zeros_like(const PolicyParams& p) {
    Gradients g;
    for (const auto& m : p.values) g.values.emplace_back(m.rows(), m.cols());
    return g;
  }
  double norm() const {
    double s = 0.0;
    for (const auto& m : values)
      for (double v : m.data()) s += v * v;
    return std::sqrt(s);
  }
};

// -- checkpoints --------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json params_to_json(const PolicyParams& p, const nlohmann::json& config_echo = {}) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["net"] = p.cfg;
  if (!config_echo.is_null()) j["config"] = config_echo;
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < p.size(); ++i)
    arr.push_back({{"name", p.names[i]},
                   {"shape", {p.values[i].rows(), p.values[i].cols()}},
                   {"values", p.values[i].data()}});
  j["params"] = std::move(arr);
  return j;
}

// Loads a checkpoint and checks it against the expected network widths;
// mismatches name the offending parameter.
inline PolicyParams params_from_json(const nlohmann::json& j, const NetConfig* expected = nullptr) {
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(j.at("version").get<int>()));
  PolicyParams p;
  p.cfg = j.at("net").get<NetConfig>();
  const NetConfig& want = expected ? *expected : p.cfg;
  const auto specs = param_specs(want);
  const auto& arr = j.at("params");
  if (arr.size() != specs.size())
    throw std::runtime_error("checkpoint: has " + std::to_string(arr.size()) + " parameters, expected " +
                             std::to_string(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& e = arr[i];
    const auto name = e.at("name").get<std::string>();
    if (name != specs[i].name)
      throw std::runtime_error("checkpoint: parameter " + std::to_string(i) + " is '" + name + "', expected '" +
                               specs[i].name + "'");
    const auto rows = e.at("shape").at(0).get<std::size_t>();
    const auto cols = e.at("shape").at(1).get<std::size_t>();
    if (rows != specs[i].rows || cols != specs[i].cols)
      throw std::runtime_error("checkpoint: parameter '" + name + "' has shape " + std::to_string(rows) + "x" +
                               std::to_string(cols) + ", expected " + std::to_string(specs[i].rows) + "x" +
                               std::to_string(specs[i].cols));
    p.names.push_back(name);
    p.values.emplace_back(rows, cols, e.at("values").get<std::vector<double>>());
  }
  p.cfg = want;
  return p;
}

inline void save_checkpoint(const std::string& path, const PolicyParams& p, const nlohmann::json& config_echo = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << params_to_json(p, config_echo).dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline PolicyParams load_checkpoint(const std::string& path, const NetConfig* expected = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return params_from_json(j, expected);
}

}  // namespace scenred::nn
