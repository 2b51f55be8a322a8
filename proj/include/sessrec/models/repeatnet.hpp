#pragma once

#include <span>
#include <string>
#include <vector>

#include "sessrec/ag/tape.hpp"
#include "sessrec/data/sessions.hpp"
#include "sessrec/loss.hpp"
#include "sessrec/nn/embedding.hpp"
#include "sessrec/nn/fusion.hpp"
#include "sessrec/nn/gru.hpp"
#include "sessrec/types.hpp"

namespace sessrec::repeatnet {

struct ModelConfig {
  index_t item_vocab = 0;  // includes the pad slot
  index_t side_vocab = 0;  // includes the pad slot; may be 0 without side
  index_t embedding_dim = 100;
  index_t side_dim = 100;
  index_t hidden_dim = 100;
  bool use_side = false;
  std::uint64_t init_seed = 42;

  index_t fused_dim() const { return use_side ? 2 * hidden_dim : hidden_dim; }
  index_t candidate_dim() const { return use_side ? embedding_dim + side_dim : embedding_dim; }
  void validate() const;
};

/** One additive attention head: e_t = v^T tanh(query*q + key*h_t). */
struct AttentionParams {
  ag::Parameter v;
  ag::Parameter query;
  ag::Parameter key;
};

struct PredictionDistribution {
  vector_t probs;  // over the item vocabulary; probs[0] == 0
  scalar_t p_repeat = 0;
  scalar_t p_explore = 0;
};

struct Params {
  nn::EmbeddingTable item_embeddings;
  nn::EmbeddingTable side_embeddings;
  nn::GruParams item_encoder;
  nn::GruParams side_encoder;
  AttentionParams mode_attention;  // repeat-or-explore gate
  ag::Parameter mode_out;          // 2 x fused
  AttentionParams repeat_attention;
  AttentionParams explore_attention;
  ag::Parameter explore_projection;  // candidate_dim x 2*fused

  template <class F>
  void visit(F&& f) {
    auto attn = [&](AttentionParams& a) {
      f(a.v);
      f(a.query);
      f(a.key);
    };
    f(item_embeddings.table);
    if (side_embeddings.table.value.size() > 0) f(side_embeddings.table);
    f(item_encoder.update);
    f(item_encoder.reset);
    f(item_encoder.candidate);
    if (side_encoder.update.value.size() > 0) {
      f(side_encoder.update);
      f(side_encoder.reset);
      f(side_encoder.candidate);
    }
    attn(mode_attention);
    f(mode_out);
    attn(repeat_attention);
    attn(explore_attention);
    f(explore_projection);
  }
};

/**
 * Repeat-aware recurrent recommender. A GRU encodes the item prefix (and a
 * second GRU the side prefix, concatenated per step); a gate mixes a
 * repeat decoder restricted to in-prefix items with an explore decoder
 * that scores every out-of-prefix item by a dot product between a
 * projected session vector and the (item, side) embedding.
 */
class RepeatNet {
 public:
  RepeatNet(ModelConfig cfg, std::vector<SideValue> side_map);

  const ModelConfig& config() const { return cfg_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }
  const std::vector<SideValue>& side_map() const { return side_map_; }

  /** Forward pass only. */
  LossBreakdown batch_loss(std::span<const data::Session> batch, scalar_t attention_weight) const;

  /** Forward + backward: accumulates into every Parameter's grad. */
  LossBreakdown batch_loss_grad(std::span<const data::Session> batch, scalar_t attention_weight);

  /** Groups prefix-expanded examples back into sessions first. */
  LossBreakdown example_batch_loss(std::span<const data::TrainingExample> examples,
                                   scalar_t attention_weight) const;

  PredictionDistribution predict(const data::TrainingExample& example) const;

  /** result[k] = distribution over the vocabulary predicting items[k+1]. */
  std::vector<vector_t> score_prefixes(const data::Session& session) const;

  template <class F>
  void visit_params(F&& f) {
    params_.visit(std::forward<F>(f));
  }

  void zero_grads();

 private:
  ModelConfig cfg_;
  std::vector<SideValue> side_map_;
  matrix_t side_mix_;  // item_vocab x side_vocab averaging map
  Params params_;
};

// ---- operation-level entry points (forward only, arbitrary masks) ----

/** Gate probabilities (p_repeat, p_explore) from a hidden sequence. */
std::pair<scalar_t, scalar_t> repeat_explore_gate(const nn::FusedHiddenSequence& hidden,
                                                  const AttentionParams& attention,
                                                  const ag::Parameter& mode_out);

/**
 * Distribution over the vocabulary confined to items occurring at unmasked
 * prefix positions; an item appearing k times collects its k softmax
 * weights.
 */
vector_t repeat_decoder(const nn::FusedHiddenSequence& hidden, std::span<const vocab_id> input_items,
                        const AttentionParams& attention, index_t vocab_size);

/**
 * Distribution over out-of-prefix items: candidates are scored by
 * <projection * [h_last; attention context], candidate_row>.
 */
vector_t explore_decoder(const nn::FusedHiddenSequence& hidden, std::span<const vocab_id> input_items,
                         const matrix_t& candidates, const AttentionParams& attention,
                         const ag::Parameter& projection);

}  // namespace sessrec::repeatnet
