#include "sessrec/models/repeatnet.hpp"

#include <algorithm>
#include <random>

#include "sessrec/attnreg/attention_reg.hpp"
#include "sessrec/nn/init.hpp"

namespace sessrec::repeatnet {

namespace {

using ag::Tape;
using ag::Var;

constexpr scalar_t kProbFloor = 1e-12;

struct AttnVars {
  Var v, query, key;
};

struct Bound {
  Var item_table, side_table, candidates;
  nn::GruVars item_gru, side_gru;
  AttnVars mode, repeat, explore;
  Var mode_out, explore_proj;
  bool use_side = false;
};

AttnVars bind_attn(Tape& t, AttentionParams& p) {
  return {t.param(p.v), t.param(p.query), t.param(p.key)};
}

AttnVars bind_attn_const(Tape& t, const AttentionParams& p) {
  return {t.constant(p.v.value), t.constant(p.query.value), t.constant(p.key.value)};
}

/** Additive attention scores softmaxed over unmasked positions. */
Var attend_alpha(Tape& t, Var keys, Var query_proj, Var v, const mask_t& mask) {
  Var scores = ag::transpose(ag::matmul_tn(v, ag::tanh_(ag::bcast_add_col(query_proj, keys))));
  return ag::masked_softmax(scores, mask);
}

mask_t explore_eligibility(std::span<const vocab_id> step_items, const mask_t& mask, index_t vocab) {
  mask_t eligible(static_cast<std::size_t>(vocab), 1);
  eligible[0] = 0;
  for (std::size_t t = 0; t < step_items.size(); ++t)
    if (mask[t]) eligible[static_cast<std::size_t>(step_items[t])] = 0;
  if (std::none_of(eligible.begin(), eligible.end(), [](char c) { return c != 0; }))
    throw std::invalid_argument("explore decoder: the prefix covers the whole vocabulary");
  return eligible;
}

struct StepVars {
  Var probs;
  Var mode_probs;     // [p_repeat, p_explore]
  Var explore_alpha;  // session attention over prefix steps
};

/**
 * One prediction step. `h_cols` are the hidden columns for the prefix,
 * `*_keys` the matching key projections, `query` the last unmasked hidden
 * state, `step_items` the item IDs at those columns.
 */
StepVars step_distribution(Tape& t, const Bound& b, Var h_cols, Var mode_keys, Var repeat_keys,
                           Var explore_keys, Var query, std::span<const vocab_id> step_items,
                           const mask_t& mask, index_t vocab) {
  Var alpha_mode = attend_alpha(t, mode_keys, ag::matmul(b.mode.query, query), b.mode.v, mask);
  Var session_ctx = ag::matmul(h_cols, alpha_mode);
  Var mode_probs = ag::masked_softmax(ag::matmul(b.mode_out, session_ctx), mask_t{1, 1});

  Var alpha_rep = attend_alpha(t, repeat_keys, ag::matmul(b.repeat.query, query), b.repeat.v, mask);
  Var repeat_probs = ag::scatter_rows(alpha_rep, step_items, vocab);

  Var alpha_exp = attend_alpha(t, explore_keys, ag::matmul(b.explore.query, query), b.explore.v, mask);
  Var explore_ctx = ag::matmul(h_cols, alpha_exp);
  Var projected = ag::matmul(b.explore_proj, ag::vcat(query, explore_ctx));
  Var scores = ag::matmul(b.candidates, projected);
  Var explore_probs = ag::masked_softmax(scores, explore_eligibility(step_items, mask, vocab));

  Var probs = ag::add(ag::smul(ag::pick(mode_probs, 0), repeat_probs),
                      ag::smul(ag::pick(mode_probs, 1), explore_probs));
  return {probs, mode_probs, alpha_exp};
}

struct Encoded {
  std::vector<Var> steps;  // fused hidden per encoded position
  Var H;                   // fused_dim x count
  Var mode_keys, repeat_keys, explore_keys;
};

Encoded encode_steps(Tape& t, const Bound& b, std::span<const vocab_id> items,
                     std::span<const SideValue> sides, std::size_t count) {
  const mask_t ones(count, 1);
  std::vector<Var> item_inputs;
  item_inputs.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    item_inputs.push_back(ag::row_lookup(b.item_table, items[k]));
  std::vector<Var> item_hidden = nn::gru_encode(t, item_inputs, ones, b.item_gru);

  Encoded enc;
  if (b.use_side) {
    std::vector<Var> side_inputs;
    side_inputs.reserve(count);
    for (std::size_t k = 0; k < count; ++k)
      side_inputs.push_back(ag::mean_rows(b.side_table, sides[k]));
    std::vector<Var> side_hidden = nn::gru_encode(t, side_inputs, ones, b.side_gru);
    enc.steps.reserve(count);
    for (std::size_t k = 0; k < count; ++k)
      enc.steps.push_back(ag::vcat(item_hidden[k], side_hidden[k]));
  } else {
    enc.steps = std::move(item_hidden);
  }
  enc.H = ag::hstack(enc.steps);
  enc.mode_keys = ag::matmul(b.mode.key, enc.H);
  enc.repeat_keys = ag::matmul(b.repeat.key, enc.H);
  enc.explore_keys = ag::matmul(b.explore.key, enc.H);
  return enc;
}

Var negative_log(Tape& t, Var p) {
  (void)t;
  return ag::scale(ag::log_(ag::clamp(p, kProbFloor, 1.0)), -1);
}

struct BatchTerms {
  std::vector<Var> prediction, mode, attention;
};

int last_unmasked(const mask_t& mask) {
  int last = -1;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) last = static_cast<int>(i);
  if (last < 0) throw std::invalid_argument("hidden sequence has no unmasked position");
  return last;
}

matrix_t columns_of(const nn::FusedHiddenSequence& hidden) {
  if (hidden.h.empty()) throw std::invalid_argument("empty hidden sequence");
  matrix_t m(hidden.h.front().size(), static_cast<index_t>(hidden.h.size()));
  for (std::size_t i = 0; i < hidden.h.size(); ++i) {
    if (hidden.h[i].size() != m.rows()) throw ShapeError("ragged hidden sequence");
    m.col(static_cast<index_t>(i)) = hidden.h[i];
  }
  return m;
}

}  // namespace

void ModelConfig::validate() const {
  if (item_vocab < 2) throw ConfigError("item vocabulary must contain at least one real item");
  if (embedding_dim < 1 || hidden_dim < 1) throw ConfigError("embedding and hidden dims must be positive");
  if (use_side && side_vocab < 2)
    throw ConfigError("side branch enabled but the side vocabulary is empty");
  if (use_side && side_dim < 1) throw ConfigError("side embedding dim must be positive");
}

RepeatNet::RepeatNet(ModelConfig cfg, std::vector<SideValue> side_map)
    : cfg_(cfg), side_map_(std::move(side_map)) {
  cfg_.validate();
  if (cfg_.use_side && static_cast<index_t>(side_map_.size()) != cfg_.item_vocab)
    throw ConfigError("side map must cover the item vocabulary");
  std::mt19937_64 rng(cfg_.init_seed);
  const index_t fused = cfg_.fused_dim();

  params_.item_embeddings = nn::make_embedding("item_embeddings", cfg_.item_vocab, cfg_.embedding_dim, rng);
  params_.item_encoder = nn::make_gru("item_encoder", cfg_.embedding_dim, cfg_.hidden_dim, rng);
  if (cfg_.use_side) {
    params_.side_embeddings = nn::make_embedding("side_embeddings", cfg_.side_vocab, cfg_.side_dim, rng);
    params_.side_encoder = nn::make_gru("side_encoder", cfg_.side_dim, cfg_.hidden_dim, rng);
    side_mix_ = nn::side_mix_matrix(side_map_, cfg_.side_vocab);
  }
  auto make_attention = [&](const std::string& prefix) {
    AttentionParams a;
    a.v = nn::make_param(prefix + ".v", rng, fused, 1);
    a.query = nn::make_param(prefix + ".query", rng, fused, fused);
    a.key = nn::make_param(prefix + ".key", rng, fused, fused);
    return a;
  };
  params_.mode_attention = make_attention("mode_attention");
  params_.mode_out = nn::make_param("mode_out", rng, 2, fused);
  params_.repeat_attention = make_attention("repeat_attention");
  params_.explore_attention = make_attention("explore_attention");
  params_.explore_projection =
      nn::make_param("explore_projection", rng, cfg_.candidate_dim(), 2 * fused);
}

void RepeatNet::zero_grads() {
  params_.visit([](ag::Parameter& p) { p.zero_grad(); });
}

namespace {

Bound bind_mutable(Tape& t, Params& p, const matrix_t& side_mix, bool use_side) {
  Bound b;
  b.use_side = use_side;
  b.item_table = t.param(p.item_embeddings.table);
  if (use_side) {
    b.side_table = t.param(p.side_embeddings.table);
    b.candidates = ag::hcat(b.item_table, ag::matmul(t.constant(side_mix), b.side_table));
    b.side_gru = nn::bind(t, p.side_encoder);
  } else {
    b.candidates = b.item_table;
  }
  b.item_gru = nn::bind(t, p.item_encoder);
  b.mode = bind_attn(t, p.mode_attention);
  b.mode_out = t.param(p.mode_out);
  b.repeat = bind_attn(t, p.repeat_attention);
  b.explore = bind_attn(t, p.explore_attention);
  b.explore_proj = t.param(p.explore_projection);
  return b;
}

Bound bind_const(Tape& t, const Params& p, const matrix_t& side_mix, bool use_side) {
  Bound b;
  b.use_side = use_side;
  b.item_table = t.constant(p.item_embeddings.table.value);
  if (use_side) {
    b.side_table = t.constant(p.side_embeddings.table.value);
    b.candidates = t.constant(matrix_t(
        [&] {
          matrix_t c(p.item_embeddings.table.value.rows(),
                     p.item_embeddings.table.value.cols() + p.side_embeddings.table.value.cols());
          c.leftCols(p.item_embeddings.table.value.cols()) = p.item_embeddings.table.value;
          c.rightCols(p.side_embeddings.table.value.cols()) =
              side_mix * p.side_embeddings.table.value;
          return c;
        }()));
    b.side_gru = nn::GruVars{t.constant(p.side_encoder.update.value),
                             t.constant(p.side_encoder.reset.value),
                             t.constant(p.side_encoder.candidate.value)};
  } else {
    b.candidates = b.item_table;
  }
  b.item_gru = nn::GruVars{t.constant(p.item_encoder.update.value),
                           t.constant(p.item_encoder.reset.value),
                           t.constant(p.item_encoder.candidate.value)};
  b.mode = bind_attn_const(t, p.mode_attention);
  b.mode_out = t.constant(p.mode_out.value);
  b.repeat = bind_attn_const(t, p.repeat_attention);
  b.explore = bind_attn_const(t, p.explore_attention);
  b.explore_proj = t.constant(p.explore_projection.value);
  return b;
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

void session_terms(Tape& t, const Bound& b, const data::Session& s, const ModelConfig& cfg,
                   scalar_t attention_weight, BatchTerms& acc) {
  const std::size_t n = s.items.size();
  const std::size_t enc_len = n - 1;
  Encoded enc = encode_steps(t, b, s.items, s.sides, enc_len);
  for (std::size_t r = 1; r < n; ++r) {
    const index_t len = static_cast<index_t>(r);
    const bool full = r == enc_len;
    Var h_cols = full ? enc.H : ag::first_cols(enc.H, len);
    Var mode_keys = full ? enc.mode_keys : ag::first_cols(enc.mode_keys, len);
    Var repeat_keys = full ? enc.repeat_keys : ag::first_cols(enc.repeat_keys, len);
    Var explore_keys = full ? enc.explore_keys : ag::first_cols(enc.explore_keys, len);
    const std::span<const vocab_id> prefix_items(s.items.data(), r);
    const mask_t ones(r, 1);
    StepVars step = step_distribution(t, b, h_cols, mode_keys, repeat_keys, explore_keys,
                                      enc.steps[r - 1], prefix_items, ones, cfg.item_vocab);

    acc.prediction.push_back(negative_log(t, ag::pick(step.probs, s.items[r])));
    const bool repeated =
        std::find(prefix_items.begin(), prefix_items.end(), s.items[r]) != prefix_items.end();
    acc.mode.push_back(negative_log(t, ag::pick(step.mode_probs, repeated ? 0 : 1)));

    if (attention_weight > 0) {
      const std::span<const SideValue> prefix_sides(s.sides.data(), r);
      vector_t target = attnreg::combined_target(prefix_items, prefix_sides, s.items[r],
                                                 s.sides[r], cfg.use_side);
      if ((target.array() != 0).any()) {
        Var logs = ag::log_(ag::clamp(step.explore_alpha, kProbFloor, 1.0));
        acc.attention.push_back(ag::scale(ag::dot(t.constant(matrix_t(target)), logs), -1));
      }
    }
  }
}

LossBreakdown build_batch_loss(Tape& t, const Bound& b, std::span<const data::Session> batch,
                               const ModelConfig& cfg, scalar_t attention_weight, Var* total_out) {
  if (batch.empty()) throw std::invalid_argument("loss over an empty batch");
  if (attention_weight < 0) throw ConfigError("attention loss weight must be >= 0");
  BatchTerms acc;
  for (const data::Session& s : batch) {
    check_session(s, cfg);
    session_terms(t, b, s, cfg, attention_weight, acc);
  }
  const scalar_t inv = scalar_t(1) / static_cast<scalar_t>(batch.size());
  Var l_pred = ag::scale(ag::sum(acc.prediction), inv);
  Var l_mode = ag::scale(ag::sum(acc.mode), inv);
  Var l_att = acc.attention.empty() ? t.constant(matrix_t::Zero(1, 1))
                                    : ag::scale(ag::sum(acc.attention), inv);
  Var total = ag::add(ag::add(l_pred, l_mode), ag::scale(l_att, attention_weight));

  LossBreakdown out;
  out.prediction = ag::scalar(l_pred);
  out.mode = ag::scalar(l_mode);
  out.attention = ag::scalar(l_att);
  out.total = ag::scalar(total);
  if (total_out) *total_out = total;
  return out;
}

}  // namespace

LossBreakdown RepeatNet::batch_loss(std::span<const data::Session> batch,
                                    scalar_t attention_weight) const {
  Tape t;
  Bound b = bind_const(t, params_, side_mix_, cfg_.use_side);
  return build_batch_loss(t, b, batch, cfg_, attention_weight, nullptr);
}

LossBreakdown RepeatNet::batch_loss_grad(std::span<const data::Session> batch,
                                         scalar_t attention_weight) {
  Tape t;
  Bound b = bind_mutable(t, params_, side_mix_, cfg_.use_side);
  Var total;
  LossBreakdown out = build_batch_loss(t, b, batch, cfg_, attention_weight, &total);
  t.backward(total);
  return out;
}

LossBreakdown RepeatNet::example_batch_loss(std::span<const data::TrainingExample> examples,
                                            scalar_t attention_weight) const {
  const std::vector<data::Session> sessions = data::group_examples(examples);
  return batch_loss(sessions, attention_weight);
}

PredictionDistribution RepeatNet::predict(const data::TrainingExample& example) const {
  if (example.prefix_len < 1) throw std::invalid_argument("prediction needs a non-empty prefix");
  Tape t;
  Bound b = bind_const(t, params_, side_mix_, cfg_.use_side);
  const std::size_t len = static_cast<std::size_t>(example.prefix_len);
  const std::span<const vocab_id> items(example.input.data(), len);
  const std::span<const SideValue> sides(example.side_input.data(), len);
  Encoded enc = encode_steps(t, b, items, sides, len);
  const mask_t ones(len, 1);
  StepVars step = step_distribution(t, b, enc.H, enc.mode_keys, enc.repeat_keys, enc.explore_keys,
                                    enc.steps[len - 1], items, ones, cfg_.item_vocab);
  PredictionDistribution out;
  out.probs = step.probs.value().col(0);
  out.p_repeat = step.mode_probs.value()(0, 0);
  out.p_explore = step.mode_probs.value()(1, 0);
  return out;
}

std::vector<vector_t> RepeatNet::score_prefixes(const data::Session& session) const {
  check_session(session, cfg_);
  Tape t;
  Bound b = bind_const(t, params_, side_mix_, cfg_.use_side);
  const std::size_t n = session.items.size();
  Encoded enc = encode_steps(t, b, session.items, session.sides, n - 1);
  std::vector<vector_t> out;
  out.reserve(n - 1);
  for (std::size_t r = 1; r < n; ++r) {
    const index_t len = static_cast<index_t>(r);
    const bool full = r == n - 1;
    Var h_cols = full ? enc.H : ag::first_cols(enc.H, len);
    Var mode_keys = full ? enc.mode_keys : ag::first_cols(enc.mode_keys, len);
    Var repeat_keys = full ? enc.repeat_keys : ag::first_cols(enc.repeat_keys, len);
    Var explore_keys = full ? enc.explore_keys : ag::first_cols(enc.explore_keys, len);
    const std::span<const vocab_id> prefix_items(session.items.data(), r);
    const mask_t ones(r, 1);
    StepVars step = step_distribution(t, b, h_cols, mode_keys, repeat_keys, explore_keys,
                                      enc.steps[r - 1], prefix_items, ones, cfg_.item_vocab);
    out.push_back(step.probs.value().col(0));
  }
  return out;
}

// ---- operation-level entry points ----

std::pair<scalar_t, scalar_t> repeat_explore_gate(const nn::FusedHiddenSequence& hidden,
                                                  const AttentionParams& attention,
                                                  const ag::Parameter& mode_out) {
  Tape t;
  const int last = last_unmasked(hidden.mask);
  Var h = t.constant(columns_of(hidden));
  AttnVars w = bind_attn_const(t, attention);
  Var query = t.constant(matrix_t(hidden.h[static_cast<std::size_t>(last)]));
  Var alpha = attend_alpha(t, ag::matmul(w.key, h), ag::matmul(w.query, query), w.v, hidden.mask);
  Var ctx = ag::matmul(h, alpha);
  Var p = ag::masked_softmax(ag::matmul(t.constant(mode_out.value), ctx), mask_t{1, 1});
  return {p.value()(0, 0), p.value()(1, 0)};
}

vector_t repeat_decoder(const nn::FusedHiddenSequence& hidden, std::span<const vocab_id> input_items,
                        const AttentionParams& attention, index_t vocab_size) {
  if (input_items.size() != hidden.h.size())
    throw ShapeError("repeat_decoder: item list length mismatch");
  Tape t;
  const int last = last_unmasked(hidden.mask);
  Var h = t.constant(columns_of(hidden));
  AttnVars w = bind_attn_const(t, attention);
  Var query = t.constant(matrix_t(hidden.h[static_cast<std::size_t>(last)]));
  Var alpha = attend_alpha(t, ag::matmul(w.key, h), ag::matmul(w.query, query), w.v, hidden.mask);
  return ag::scatter_rows(alpha, input_items, vocab_size).value().col(0);
}

vector_t explore_decoder(const nn::FusedHiddenSequence& hidden, std::span<const vocab_id> input_items,
                         const matrix_t& candidates, const AttentionParams& attention,
                         const ag::Parameter& projection) {
  if (input_items.size() != hidden.h.size())
    throw ShapeError("explore_decoder: item list length mismatch");
  Tape t;
  const int last = last_unmasked(hidden.mask);
  Var h = t.constant(columns_of(hidden));
  AttnVars w = bind_attn_const(t, attention);
  Var query = t.constant(matrix_t(hidden.h[static_cast<std::size_t>(last)]));
  Var alpha = attend_alpha(t, ag::matmul(w.key, h), ag::matmul(w.query, query), w.v, hidden.mask);
  Var ctx = ag::matmul(h, alpha);
  Var projected = ag::matmul(t.constant(projection.value), ag::vcat(query, ctx));
  Var scores = ag::matmul(t.constant(candidates), projected);
  const index_t vocab = candidates.rows();
  return ag::masked_softmax(scores, explore_eligibility(input_items, hidden.mask, vocab))
      .value()
      .col(0);
}

}  // namespace sessrec::repeatnet
