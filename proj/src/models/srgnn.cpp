#include "sessrec/models/srgnn.hpp"

#include <algorithm>
#include <random>

#include "sessrec/attnreg/attention_reg.hpp"
#include "sessrec/nn/init.hpp"

namespace sessrec::srgnn {

namespace {

using ag::Tape;
using ag::Var;

constexpr scalar_t kProbFloor = 1e-12;

struct PropVars {
  Var transform, bias, update_a, update_v, reset_a, reset_v, cand_a, cand_v;
};

struct ReadoutVars {
  Var q, w_last, w_each, bias, merge;
};

struct Bound {
  Var item_table, side_table, candidates;
  PropVars item_prop, side_prop;
  ReadoutVars readout;
  bool use_side = false;
};

PropVars bind_prop(Tape& t, PropagationParams& p) {
  return {t.param(p.transform), t.param(p.bias),     t.param(p.update_a), t.param(p.update_v),
          t.param(p.reset_a),   t.param(p.reset_v),  t.param(p.cand_a),   t.param(p.cand_v)};
}

PropVars bind_prop_const(Tape& t, const PropagationParams& p) {
  return {t.constant(p.transform.value), t.constant(p.bias.value),
          t.constant(p.update_a.value),  t.constant(p.update_v.value),
          t.constant(p.reset_a.value),   t.constant(p.reset_v.value),
          t.constant(p.cand_a.value),    t.constant(p.cand_v.value)};
}

/** Node vectors as columns; one gated step per call. */
Var propagate_step(Tape& t, const SessionGraph& g, Var node_cols, const PropVars& w) {
  Var agg_out = ag::matmul(node_cols, t.constant(matrix_t(g.out_adjacency.transpose())));
  Var agg_in = ag::matmul(node_cols, t.constant(matrix_t(g.in_adjacency.transpose())));
  Var a = ag::bcast_add_col(w.bias, ag::matmul(w.transform, ag::vcat(agg_out, agg_in)));
  Var z = ag::sigmoid(ag::add(ag::matmul(w.update_a, a), ag::matmul(w.update_v, node_cols)));
  Var r = ag::sigmoid(ag::add(ag::matmul(w.reset_a, a), ag::matmul(w.reset_v, node_cols)));
  Var cand = ag::tanh_(
      ag::add(ag::matmul(w.cand_a, a), ag::matmul(w.cand_v, ag::cmul(r, node_cols))));
  return ag::add(ag::cmul(ag::one_minus(z), node_cols), ag::cmul(z, cand));
}

Var propagate_cols(Tape& t, const SessionGraph& g, Var node_cols, const PropVars& w, int steps) {
  if (steps < 1) throw ConfigError("propagation needs at least one step");
  Var v = node_cols;
  for (int s = 0; s < steps; ++s) v = propagate_step(t, g, v, w);
  return v;
}

/** Raw per-position attention weights against the last position. */
Var readout_alpha(Tape& t, Var cols, Var last, const ReadoutVars& w) {
  Var gate = ag::sigmoid(
      ag::bcast_add_col(ag::add(ag::matmul(w.w_last, last), w.bias), ag::matmul(w.w_each, cols)));
  return ag::transpose(ag::matmul_tn(w.q, gate));  // T x 1
}

Var readout_vector(Tape& t, Var cols, Var last, Var alpha, const ReadoutVars& w) {
  (void)t;
  Var pooled = ag::matmul(cols, alpha);
  return ag::matmul(w.merge, ag::vcat(last, pooled));
}

mask_t non_pad_mask(index_t vocab) {
  mask_t m(static_cast<std::size_t>(vocab), 1);
  m[0] = 0;
  return m;
}

/** Gather embedding rows for the graph's nodes as columns. */
Var node_columns(Tape& t, Var table, const SessionGraph& g) {
  std::vector<Var> cols;
  cols.reserve(g.nodes.size());
  for (vocab_id id : g.nodes) cols.push_back(ag::row_lookup(table, id));
  return ag::hstack(cols);
}

struct StepVars {
  Var y_hat;
  Var alpha_norm;  // per-position attention, softmax-normalized
};

/**
 * Full prediction for one prefix: graphs per encoder, propagation,
 * per-position gather, readout, candidate scoring.
 */
StepVars step_distribution(Tape& t, const Bound& b, const ModelConfig& cfg,
                           std::span<const vocab_id> prefix_items,
                           std::span<const SideValue> prefix_sides) {
  const SessionGraph item_graph = build_session_graph(prefix_items);
  Var item_nodes = propagate_cols(t, item_graph, node_columns(t, b.item_table, item_graph),
                                  b.item_prop, cfg.propagation_steps);
  Var positional = ag::gather_cols(item_nodes, item_graph.alias);
  if (b.use_side) {
    std::vector<vocab_id> side_ids;
    side_ids.reserve(prefix_sides.size());
    for (const SideValue& s : prefix_sides) {
      if (s.size() != 1)
        throw ConfigError(
            "graph side encoder supports exactly one category per item (multi-valued side "
            "information is unsupported)");
      side_ids.push_back(s.front());
    }
    const SessionGraph side_graph = build_session_graph(side_ids);
    Var side_nodes = propagate_cols(t, side_graph, node_columns(t, b.side_table, side_graph),
                                    b.side_prop, cfg.propagation_steps);
    positional = ag::vcat(positional, ag::gather_cols(side_nodes, side_graph.alias));
  }
  const std::vector<int> last_index{static_cast<int>(prefix_items.size()) - 1};
  Var last = ag::gather_cols(positional, last_index);
  Var alpha = readout_alpha(t, positional, last, b.readout);
  Var session_vec = readout_vector(t, positional, last, alpha, b.readout);
  Var scores = ag::matmul(b.candidates, session_vec);
  StepVars out;
  out.y_hat = ag::masked_softmax(scores, non_pad_mask(cfg.item_vocab));
  out.alpha_norm = ag::masked_softmax(alpha, mask_t(prefix_items.size(), 1));
  return out;
}

Bound bind_mutable(Tape& t, Params& p, const matrix_t& side_mix, bool use_side) {
  Bound b;
  b.use_side = use_side;
  b.item_table = t.param(p.item_embeddings.table);
  if (use_side) {
    b.side_table = t.param(p.side_embeddings.table);
    b.candidates = ag::hcat(b.item_table, ag::matmul(t.constant(side_mix), b.side_table));
    b.side_prop = bind_prop(t, p.side_propagation);
  } else {
    b.candidates = b.item_table;
  }
  b.item_prop = bind_prop(t, p.item_propagation);
  b.readout = ReadoutVars{t.param(p.readout.q), t.param(p.readout.w_last),
                          t.param(p.readout.w_each), t.param(p.readout.bias),
                          t.param(p.readout.merge)};
  return b;
}

Bound bind_const(Tape& t, const Params& p, const matrix_t& side_mix, bool use_side) {
  Bound b;
  b.use_side = use_side;
  b.item_table = t.constant(p.item_embeddings.table.value);
  if (use_side) {
    matrix_t cand(p.item_embeddings.table.value.rows(),
                  p.item_embeddings.table.value.cols() + p.side_embeddings.table.value.cols());
    cand.leftCols(p.item_embeddings.table.value.cols()) = p.item_embeddings.table.value;
    cand.rightCols(p.side_embeddings.table.value.cols()) =
        side_mix * p.side_embeddings.table.value;
    b.side_table = t.constant(p.side_embeddings.table.value);
    b.candidates = t.constant(std::move(cand));
    b.side_prop = bind_prop_const(t, p.side_propagation);
  } else {
    b.candidates = b.item_table;
  }
  b.item_prop = bind_prop_const(t, p.item_propagation);
  b.readout = ReadoutVars{t.constant(p.readout.q.value), t.constant(p.readout.w_last.value),
                          t.constant(p.readout.w_each.value), t.constant(p.readout.bias.value),
                          t.constant(p.readout.merge.value)};
  return b;
}

Var example_cross_entropy(Tape& t, Var y_hat, vocab_id target, index_t vocab) {
  if (target <= 0 || target >= vocab)
    throw std::invalid_argument("cross entropy target must be a non-pad vocabulary item");
  Var clamped = ag::clamp(y_hat, kProbFloor, 1.0 - kProbFloor);
  Var target_term = ag::log_(ag::pick(clamped, target));
  vector_t weights = vector_t::Ones(vocab);
  weights(0) = 0;
  weights(target) = 0;
  Var rest_term = ag::dot(t.constant(matrix_t(weights)), ag::log_(ag::one_minus(clamped)));
  return ag::scale(ag::add(target_term, rest_term), -1);
}

void check_session(const data::Session& s, const ModelConfig& cfg) {
  if (s.items.size() < 2) throw std::invalid_argument("sessions in a batch must have length >= 2");
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    if (s.items[i] <= 0 || s.items[i] >= cfg.item_vocab)
      throw std::invalid_argument("session item id out of vocabulary range");
    if (cfg.use_side && s.sides[i].empty())
      throw std::invalid_argument("side branch enabled but a session step has no side value");
  }
}

LossBreakdown build_batch_loss(Tape& t, const Bound& b, std::span<const data::Session> batch,
                               const ModelConfig& cfg, scalar_t attention_weight, Var* total_out) {
  if (batch.empty()) throw std::invalid_argument("loss over an empty batch");
  if (attention_weight < 0) throw ConfigError("attention loss weight must be >= 0");
  std::vector<Var> prediction_terms;
  std::vector<Var> attention_terms;
  for (const data::Session& s : batch) {
    check_session(s, cfg);
    const std::size_t n = s.items.size();
    for (std::size_t r = 1; r < n; ++r) {
      const std::span<const vocab_id> prefix_items(s.items.data(), r);
      const std::span<const SideValue> prefix_sides(s.sides.data(), r);
      StepVars step = step_distribution(t, b, cfg, prefix_items, prefix_sides);
      prediction_terms.push_back(example_cross_entropy(t, step.y_hat, s.items[r], cfg.item_vocab));
      if (attention_weight > 0) {
        vector_t target = attnreg::combined_target(prefix_items, prefix_sides, s.items[r],
                                                   s.sides[r], cfg.use_side);
        if ((target.array() != 0).any()) {
          Var logs = ag::log_(ag::clamp(step.alpha_norm, kProbFloor, 1.0));
          attention_terms.push_back(ag::scale(ag::dot(t.constant(matrix_t(target)), logs), -1));
        }
      }
    }
  }
  Var l_pred = ag::scale(ag::sum(prediction_terms),
                         scalar_t(1) / static_cast<scalar_t>(prediction_terms.size()));
  Var l_att = attention_terms.empty()
                  ? t.constant(matrix_t::Zero(1, 1))
                  : ag::scale(ag::sum(attention_terms),
                              scalar_t(1) / static_cast<scalar_t>(batch.size()));
  Var total = ag::add(l_pred, ag::scale(l_att, attention_weight));

  LossBreakdown out;
  out.prediction = ag::scalar(l_pred);
  out.attention = ag::scalar(l_att);
  out.total = ag::scalar(total);
  if (total_out) *total_out = total;
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  if (item_vocab < 2) throw ConfigError("item vocabulary must contain at least one real item");
  if (embedding_dim < 1) throw ConfigError("embedding dim must be positive");
  if (propagation_steps < 1) throw ConfigError("propagation_steps must be >= 1");
  if (use_side && side_vocab < 2)
    throw ConfigError("side branch enabled but the side vocabulary is empty");
  if (use_side && side_dim < 1) throw ConfigError("side embedding dim must be positive");
}

SessionGraph build_session_graph(std::span<const vocab_id> prefix) {
  if (prefix.empty()) throw std::invalid_argument("cannot build a graph from an empty prefix");
  SessionGraph g;
  std::vector<int> index_of;
  for (vocab_id id : prefix) {
    if (id <= 0) throw std::invalid_argument("session graph prefix contains a pad id");
    auto it = std::find(g.nodes.begin(), g.nodes.end(), id);
    if (it == g.nodes.end()) {
      g.nodes.push_back(id);
      g.alias.push_back(static_cast<int>(g.nodes.size()) - 1);
    } else {
      g.alias.push_back(static_cast<int>(it - g.nodes.begin()));
    }
  }
  const index_t n = g.size();
  matrix_t occurrences = matrix_t::Zero(n, n);
  for (std::size_t t = 0; t + 1 < prefix.size(); ++t)
    occurrences(g.alias[t], g.alias[t + 1]) += 1.0;
  g.out_adjacency = matrix_t::Zero(n, n);
  g.in_adjacency = matrix_t::Zero(n, n);
  for (index_t u = 0; u < n; ++u) {
    const scalar_t out_total = occurrences.row(u).sum();
    if (out_total > 0) g.out_adjacency.row(u) = occurrences.row(u) / out_total;
    const scalar_t in_total = occurrences.col(u).sum();
    if (in_total > 0) g.in_adjacency.row(u) = occurrences.col(u).transpose() / in_total;
  }
  g.last_node = g.alias.back();
  return g;
}

Srgnn::Srgnn(ModelConfig cfg, std::vector<SideValue> side_map)
    : cfg_(cfg), side_map_(std::move(side_map)) {
  cfg_.validate();
  if (cfg_.use_side) {
    if (static_cast<index_t>(side_map_.size()) != cfg_.item_vocab)
      throw ConfigError("side map must cover the item vocabulary");
    for (const SideValue& s : side_map_)
      if (s.size() > 1)
        throw ConfigError(
            "graph side encoder supports exactly one category per item (multi-valued side "
            "information is unsupported)");
  }
  std::mt19937_64 rng(cfg_.init_seed);
  const index_t d = cfg_.embedding_dim;
  const index_t ds = cfg_.side_dim;
  const index_t fused = cfg_.fused_dim();

  auto make_prop = [&](const std::string& prefix, index_t dim) {
    PropagationParams p;
    p.transform = nn::make_param(prefix + ".transform", rng, dim, 2 * dim);
    p.bias = nn::make_param(prefix + ".bias", rng, dim, 1);
    p.update_a = nn::make_param(prefix + ".update_a", rng, dim, dim);
    p.update_v = nn::make_param(prefix + ".update_v", rng, dim, dim);
    p.reset_a = nn::make_param(prefix + ".reset_a", rng, dim, dim);
    p.reset_v = nn::make_param(prefix + ".reset_v", rng, dim, dim);
    p.cand_a = nn::make_param(prefix + ".cand_a", rng, dim, dim);
    p.cand_v = nn::make_param(prefix + ".cand_v", rng, dim, dim);
    return p;
  };

  params_.item_embeddings = nn::make_embedding("item_embeddings", cfg_.item_vocab, d, rng);
  params_.item_propagation = make_prop("item_propagation", d);
  if (cfg_.use_side) {
    params_.side_embeddings = nn::make_embedding("side_embeddings", cfg_.side_vocab, ds, rng);
    params_.side_propagation = make_prop("side_propagation", ds);
    side_mix_ = nn::side_mix_matrix(side_map_, cfg_.side_vocab);
  }
  params_.readout.q = nn::make_param("readout.q", rng, fused, 1);
  params_.readout.w_last = nn::make_param("readout.w_last", rng, fused, fused);
  params_.readout.w_each = nn::make_param("readout.w_each", rng, fused, fused);
  params_.readout.bias = nn::make_param("readout.bias", rng, fused, 1);
  params_.readout.merge = nn::make_param("readout.merge", rng, fused, 2 * fused);
}

void Srgnn::zero_grads() {
  params_.visit([](ag::Parameter& p) { p.zero_grad(); });
}

LossBreakdown Srgnn::batch_loss(std::span<const data::Session> batch,
                                scalar_t attention_weight) const {
  Tape t;
  Bound b = bind_const(t, params_, side_mix_, cfg_.use_side);
  return build_batch_loss(t, b, batch, cfg_, attention_weight, nullptr);
}

LossBreakdown Srgnn::batch_loss_grad(std::span<const data::Session> batch,
                                     scalar_t attention_weight) {
  Tape t;
  Bound b = bind_mutable(t, params_, side_mix_, cfg_.use_side);
  Var total;
  LossBreakdown out = build_batch_loss(t, b, batch, cfg_, attention_weight, &total);
  t.backward(total);
  return out;
}

vector_t Srgnn::predict(const data::TrainingExample& example) const {
  if (example.prefix_len < 1) throw std::invalid_argument("prediction needs a non-empty prefix");
  Tape t;
  Bound b = bind_const(t, params_, side_mix_, cfg_.use_side);
  const std::size_t len = static_cast<std::size_t>(example.prefix_len);
  StepVars step = step_distribution(t, b, cfg_, {example.input.data(), len},
                                    {example.side_input.data(), len});
  return step.y_hat.value().col(0);
}

std::vector<vector_t> Srgnn::score_prefixes(const data::Session& session) const {
  check_session(session, cfg_);
  Tape t;
  Bound b = bind_const(t, params_, side_mix_, cfg_.use_side);
  std::vector<vector_t> out;
  out.reserve(session.items.size() - 1);
  for (std::size_t r = 1; r < session.items.size(); ++r) {
    StepVars step = step_distribution(t, b, cfg_, {session.items.data(), r},
                                      {session.sides.data(), r});
    out.push_back(step.y_hat.value().col(0));
  }
  return out;
}

// ---- operation-level entry points ----

matrix_t propagate(const SessionGraph& graph, const matrix_t& node_vectors,
                   const PropagationParams& params, int steps) {
  if (node_vectors.rows() != graph.size()) throw ShapeError("propagate: node count mismatch");
  if (node_vectors.cols() != params.update_v.value.cols())
    throw ShapeError("propagate: node dimension mismatch");
  Tape t;
  PropVars w = bind_prop_const(t, params);
  Var cols = t.constant(matrix_t(node_vectors.transpose()));
  Var out = propagate_cols(t, graph, cols, w, steps);
  return out.value().transpose();
}

vector_t session_readout(const matrix_t& node_vectors, const SessionGraph& graph,
                         const ReadoutParams& params) {
  if (node_vectors.rows() != graph.size()) throw ShapeError("session_readout: node count mismatch");
  Tape t;
  ReadoutVars w{t.constant(params.q.value), t.constant(params.w_last.value),
                t.constant(params.w_each.value), t.constant(params.bias.value),
                t.constant(params.merge.value)};
  Var cols = t.constant(matrix_t(node_vectors.transpose()));
  const std::vector<int> last_index{graph.last_node};
  Var last = ag::gather_cols(cols, last_index);
  Var alpha = readout_alpha(t, cols, last, w);
  return readout_vector(t, cols, last, alpha, w).value().col(0);
}

vector_t score_and_normalize(const vector_t& session_vec, const matrix_t& candidates) {
  if (candidates.cols() != session_vec.size())
    throw ShapeError("score_and_normalize: dimension mismatch");
  Tape t;
  Var scores = ag::matmul(t.constant(candidates), t.constant(matrix_t(session_vec)));
  return ag::masked_softmax(scores, non_pad_mask(candidates.rows())).value().col(0);
}

scalar_t cross_entropy_loss(const vector_t& y_hat, vocab_id target) {
  Tape t;
  Var y = t.constant(matrix_t(y_hat));
  return ag::scalar(example_cross_entropy(t, y, target, y_hat.size()));
}

scalar_t cross_entropy_loss(std::span<const vector_t> y_hats, std::span<const vocab_id> targets) {
  if (y_hats.empty() || y_hats.size() != targets.size())
    throw std::invalid_argument("cross_entropy_loss: batch size mismatch");
  scalar_t total = 0;
  for (std::size_t i = 0; i < y_hats.size(); ++i) total += cross_entropy_loss(y_hats[i], targets[i]);
  return total / static_cast<scalar_t>(y_hats.size());
}

}  // namespace sessrec::srgnn
