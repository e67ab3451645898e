#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "scenred/core/types.hpp"
#include "scenred/graphs/graph.hpp"
#include "scenred/nn/autodiff.hpp"
#include "scenred/nn/params.hpp"
#include "scenred/rng.hpp"

namespace scenred::nn {

inline constexpr double kLogitClip = 10.0;

// Constant graph data of one instance, laid out for batched message passing:
// all subgraphs stacked into one block-diagonal adjacency.
struct GraphInput {
  std::size_t num_scenarios = 0;
  Matrix features;                               // stacked node features
  std::shared_ptr<const SparseMatrix> low_adj;   // block-diagonal, normalized
  std::shared_ptr<const SparseMatrix> readout;   // N x nodes, row j averages subgraph j
  Matrix high_adj;                               // normalized instance adjacency
};

inline GraphInput build_graph_input(const std::vector<graphs::BipartiteGraph>& subgraphs,
                                    const graphs::InstanceGraph& ig) {
  if (subgraphs.size() != ig.size())
    throw std::invalid_argument("encode: " + std::to_string(subgraphs.size()) + " subgraphs for an instance graph of " +
                                std::to_string(ig.size()) + " scenarios");
  if (subgraphs.empty()) throw std::invalid_argument("encode: no scenarios");
  GraphInput in;
  in.num_scenarios = subgraphs.size();
  std::size_t total = 0;
  for (const auto& g : subgraphs) total += g.num_nodes();
  const std::size_t width = subgraphs.front().padded_node_features.cols();
  in.features = Matrix(total, width);
  std::vector<std::tuple<std::size_t, std::size_t, double>> adj;
  std::vector<std::tuple<std::size_t, std::size_t, double>> ro;
  std::size_t off = 0;
  for (std::size_t s = 0; s < subgraphs.size(); ++s) {
    const auto& g = subgraphs[s];
    if (g.padded_node_features.cols() != width) throw std::invalid_argument("encode: feature widths differ");
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
      for (std::size_t f = 0; f < width; ++f) in.features(off + i, f) = g.padded_node_features(i, f);
    const SparseMatrix a = graphs::subgraph_message_adjacency(g);
    for (std::size_t r = 0; r < a.rows; ++r)
      for (std::size_t k = a.row_start[r]; k < a.row_start[r + 1]; ++k) adj.emplace_back(off + r, off + a.col[k], a.val[k]);
    const double inv = 1.0 / static_cast<double>(g.num_nodes());
    for (std::size_t i = 0; i < g.num_nodes(); ++i) ro.emplace_back(s, off + i, inv);
    off += g.num_nodes();
  }
  in.low_adj = std::make_shared<SparseMatrix>(SparseMatrix::from_triplets(total, total, std::move(adj)));
  in.readout = std::make_shared<SparseMatrix>(SparseMatrix::from_triplets(subgraphs.size(), total, std::move(ro)));
  in.high_adj = graphs::instance_message_adjacency(ig);
  return in;
}

// Subgraphs (standardized per instance) plus instance graph of an instance.
inline GraphInput prepare_instance(const SpInstance& inst, bool centered_similarity = true) {
  std::vector<graphs::BipartiteGraph> gs;
  gs.reserve(inst.num_scenarios());
  for (const auto& sc : inst.scenarios) gs.push_back(graphs::build_scenario_subgraph(inst.first_stage, sc));
  graphs::standardize_features(gs);
  return build_graph_input(gs, centered_similarity ? graphs::build_centered_instance_adjacency(inst.scenarios)
                                                   : graphs::build_instance_adjacency(inst.scenarios));
}

inline GraphInput prepare_instance(const SpInstance& inst, const NetConfig& cfg) {
  return prepare_instance(inst, cfg.centered_similarity);
}

// Parameters placed on a tape, aligned with PolicyParams::values.
struct ParamVars {
  std::vector<Var> vars;
  const PolicyParams* params = nullptr;
  Var operator[](const std::string& name) const { return vars[params->index(name)]; }
};

inline ParamVars bind_params(Tape& t, const PolicyParams& p, bool trainable) {
  ParamVars pv;
  pv.params = &p;
  for (const auto& m : p.values) pv.vars.push_back(trainable ? t.variable(m) : t.constant(m));
  return pv;
}

// -- encoder ------------------------------------------------------------------

// tanh(A H W)
inline Var gcn_layer(Tape& t, const std::shared_ptr<const SparseMatrix>& a, Var h, Var w) {
  return t.tanh(t.spmm(a, t.matmul(h, w)));
}
inline Var gcn_layer(Tape& t, Var a, Var h, Var w) { return t.tanh(t.matmul(a, t.matmul(h, w))); }

inline Matrix gcn_layer(const Matrix& anorm, const Matrix& h, const Matrix& w) {
  if (anorm.rows() != anorm.cols() || anorm.cols() != h.rows() || h.cols() != w.rows())
    throw std::invalid_argument("gcn_layer: shapes " + anorm.shape_string() + ", " + h.shape_string() + ", " +
                                w.shape_string() + " do not chain");
  Tape t;
  return t.value(gcn_layer(t, t.constant(anorm), t.constant(h), t.constant(w)));
}

struct EncodedVars {
  Var H;
  Var hbar;
};

inline EncodedVars encode(Tape& t, const GraphInput& in, const ParamVars& pv) {
  if (in.features.cols() != pv.params->cfg.input_features)
    throw std::invalid_argument("encode: node features have width " + std::to_string(in.features.cols()) +
                                ", network expects " + std::to_string(pv.params->cfg.input_features));
  const Var x = t.constant(in.features);
  const Var h1 = gcn_layer(t, in.low_adj, x, pv["gcn.W0"]);
  const Var h2 = gcn_layer(t, in.low_adj, h1, pv["gcn.W1"]);
  const Var z = t.spmm(in.readout, h2);
  const Var a = t.constant(in.high_adj);
  const Var g1 = gcn_layer(t, a, z, pv["gcn.W2"]);
  const Var h = gcn_layer(t, a, g1, pv["gcn.W3"]);
  return {h, t.mean_rows(h)};
}

struct EncodedInstance {
  Matrix H;                  // N x F'
  std::vector<double> hbar;  // F'
};

inline EncodedInstance encode(const GraphInput& in, const PolicyParams& p) {
  Tape t;
  const auto pv = bind_params(t, p, false);
  const auto e = encode(t, in, pv);
  return {t.value(e.H), t.value(e.hbar).data()};
}

inline EncodedInstance encode(const std::vector<graphs::BipartiteGraph>& subgraphs, const graphs::InstanceGraph& ig,
                              const PolicyParams& p) {
  return encode(build_graph_input(subgraphs, ig), p);
}

// -- decoder ------------------------------------------------------------------

// Per-decode projections of the scenario embeddings.
struct DecoderCache {
  Var H, hbar, keys, values, logit_keys;
};

inline DecoderCache decoder_cache(Tape& t, const EncodedVars& e, const ParamVars& pv) {
  return {e.H, e.hbar, t.matmul(e.H, pv["dec.Wk"]), t.matmul(e.H, pv["dec.Wv"]), t.matmul(e.H, pv["dec.Wl"])};
}

struct StepVars {
  Var logits;     // 10 tanh(compatibility), before masking
  Var probs;
  Var log_probs;  // masked entries reported as 0
  Var context;    // projected context, h_c of this step
};

// Context [hbar, v_f, v_f] at t = 1 and [hbar, h_prev, h_a] afterwards; a
// multi-head glimpse over the unmasked scenarios, then single-head logits
// squashed into [-10, 10].
inline StepVars decoder_step(Tape& t, std::size_t step, std::optional<Var> h_prev, std::optional<Var> h_a,
                             const DecoderCache& c, const Mask& mask, const ParamVars& pv) {
  const NetConfig& cfg = pv.params->cfg;
  const std::size_t n = t.value(c.H).rows();
  if (mask.size() != n) throw std::invalid_argument("decoder_step: mask has wrong length");
  if (std::all_of(mask.begin(), mask.end(), [](char m) { return m != 0; }))
    throw std::logic_error("decoder_step: every scenario is masked");
  Var ctx;
  if (step <= 1) {
    ctx = t.concat_cols({c.hbar, pv["dec.vf"], pv["dec.vf"]});
  } else {
    if (!h_prev || !h_a) throw std::invalid_argument("decoder_step: steps after the first need h_prev and h_a");
    ctx = t.concat_cols({c.hbar, *h_prev, *h_a});
  }
  const Var q = t.matmul(ctx, pv["dec.Wq"]);
  const std::size_t d = cfg.embed / cfg.heads;
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Var> heads;
  heads.reserve(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const Var qh = t.slice_cols(q, h * d, (h + 1) * d);
    const Var kh = t.slice_cols(c.keys, h * d, (h + 1) * d);
    const Var vh = t.slice_cols(c.values, h * d, (h + 1) * d);
    const Var att = t.softmax_rows(t.scale(t.matmul_bt(qh, kh), head_scale), mask);
    heads.push_back(t.matmul(att, vh));
  }
  const Var glimpse = t.matmul(t.concat_cols(heads), pv["dec.Wo"]);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.embed));
  const Var logits = t.scale(t.tanh(t.scale(t.matmul_bt(glimpse, c.logit_keys), scale)), kLogitClip);
  return {logits, t.softmax_rows(logits, mask), t.log_softmax_rows(logits, mask), q};
}

// h_a^t = (h_c^{t-1} + h_a^{t-1}) / 2
inline Var update_aux(Tape& t, Var h_c, Var h_a) { return t.scale(t.add(h_c, h_a), 0.5); }

enum class DecodeMode { kSample, kGreedy };

struct DecodeTrace {
  std::vector<std::size_t> indices;
  std::vector<double> log_probs;
  double entropy_sum = 0.0;
};

struct DecodeVars {
  std::vector<std::size_t> indices;
  Var log_prob_sum;
  Var entropy_sum;
  std::vector<Var> step_log_probs;
};

// Runs k decoder steps; choose(probs, step) picks the scenario at each step.
inline DecodeVars decode_on_tape(Tape& t, const EncodedVars& e, std::size_t k, const ParamVars& pv,
                                 const std::function<std::size_t(const std::vector<double>&, std::size_t)>& choose) {
  const std::size_t n = t.value(e.H).rows();
  if (k < 1 || k > n)
    throw std::invalid_argument("decode: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  const DecoderCache c = decoder_cache(t, e, pv);
  Mask mask(n, 0);
  DecodeVars out;
  std::optional<Var> h_prev, h_a, prev_context;
  std::vector<Var> lps, ents;
  for (std::size_t step = 1; step <= k; ++step) {
    if (step >= 2) h_a = update_aux(t, *prev_context, *h_a);
    const StepVars s = decoder_step(t, step, h_prev, h_a, c, mask, pv);
    const std::vector<double>& probs = t.value(s.probs).data();
    const std::size_t pick = choose(probs, step - 1);
    if (pick >= n || mask[pick]) throw std::logic_error("decode: chose an unavailable scenario");
    lps.push_back(t.pick(s.log_probs, 0, pick));
    ents.push_back(t.scale(t.sum(t.mul(s.probs, s.log_probs)), -1.0));
    out.indices.push_back(pick);
    mask[pick] = 1;
    const Var h_pick = t.row(c.H, pick);
    if (step == 1) h_a = h_pick;
    h_prev = h_pick;
    prev_context = s.context;
  }
  out.step_log_probs = lps;
  out.log_prob_sum = t.sum(t.concat_cols(lps));
  out.entropy_sum = t.sum(t.concat_cols(ents));
  return out;
}

inline std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline DecodeTrace decode_sequence(const EncodedInstance& enc, std::size_t k, DecodeMode mode, Rng* rng,
                                   const PolicyParams& p) {
  if (mode == DecodeMode::kSample && rng == nullptr) throw std::invalid_argument("decode_sequence: sampling needs an rng");
  Tape t;
  const auto pv = bind_params(t, p, false);
  const EncodedVars e{t.constant(enc.H), t.constant(Matrix::row_vector(enc.hbar))};
  const auto dv = decode_on_tape(t, e, k, pv, [&](const std::vector<double>& probs, std::size_t) {
    return mode == DecodeMode::kGreedy ? argmax_lowest(probs) : rng->categorical(probs);
  });
  DecodeTrace tr;
  tr.indices = dv.indices;
  for (Var v : dv.step_log_probs) tr.log_probs.push_back(t.scalar(v));
  tr.entropy_sum = t.scalar(dv.entropy_sum);
  return tr;
}

// Teacher-forced decode of a given action sequence.
inline DecodeVars decode_actions(Tape& t, const EncodedVars& e, const std::vector<std::size_t>& actions,
                                 const ParamVars& pv) {
  return decode_on_tape(t, e, actions.size(), pv,
                        [&](const std::vector<double>&, std::size_t step) { return actions[step]; });
}

struct StepResult {
  std::vector<double> probs;
  std::vector<double> context;
};

// One decoder step outside a full decode; h_prev and h_a are required for
// step > 1.
inline StepResult decoder_step(std::size_t step, const std::optional<std::vector<double>>& h_prev,
                               const std::optional<std::vector<double>>& h_a, const EncodedInstance& enc,
                               const Mask& mask, const PolicyParams& p) {
  Tape t;
  const auto pv = bind_params(t, p, false);
  const EncodedVars e{t.constant(enc.H), t.constant(Matrix::row_vector(enc.hbar))};
  const DecoderCache c = decoder_cache(t, e, pv);
  std::optional<Var> hp, ha;
  if (h_prev) hp = t.constant(Matrix::row_vector(*h_prev));
  if (h_a) ha = t.constant(Matrix::row_vector(*h_a));
  const StepVars s = decoder_step(t, step, hp, ha, c, mask, pv);
  return {t.value(s.probs).data(), t.value(s.context).data()};
}

// -- critic -------------------------------------------------------------------

// Single-head self-attention over the scenario embeddings, mean pooling, and
// a two-layer tanh perceptron.
inline Var critic_value(Tape& t, const EncodedVars& e, const ParamVars& pv) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(pv.params->cfg.embed));
  const Var q = t.matmul(e.H, pv["critic.Wq"]);
  const Var k = t.matmul(e.H, pv["critic.Wk"]);
  const Var v = t.matmul(e.H, pv["critic.Wv"]);
  const Var att = t.softmax_rows(t.scale(t.matmul_bt(q, k), scale));
  const Var pooled = t.mean_rows(t.matmul(att, v));
  const Var hidden = t.tanh(t.add_row(t.matmul(pooled, pv["critic.W1"]), pv["critic.b1"]));
  return t.add_row(t.matmul(hidden, pv["critic.W2"]), pv["critic.b2"]);
}

inline double critic_value(const EncodedInstance& enc, const PolicyParams& p) {
  Tape t;
  const auto pv = bind_params(t, p, false);
  const EncodedVars e{t.constant(enc.H), t.constant(Matrix::row_vector(enc.hbar))};
  return t.scalar(critic_value(t, e, pv));
}

// -- gradients ----------------------------------------------------------------

using LossFn = std::function<Var(Tape&, const ParamVars&)>;

// Reverse-mode gradient of a scalar loss built on the tape.
inline Gradients grad(const LossFn& loss_fn, const PolicyParams& p, double* loss_value = nullptr) {
  Tape t;
  const auto pv = bind_params(t, p, true);
  const Var loss = loss_fn(t, pv);
  if (t.value(loss).size() != 1) throw std::invalid_argument("grad: loss is not a scalar");
  t.backward(loss);
  Gradients g;
  for (Var v : pv.vars) g.values.push_back(t.gradient(v));
  if (loss_value) *loss_value = t.scalar(loss);
  return g;
}

}  // namespace scenred::nn
