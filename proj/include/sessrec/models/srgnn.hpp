#pragma once

#include <span>
#include <string>
#include <vector>

#include "sessrec/ag/tape.hpp"
#include "sessrec/data/sessions.hpp"
#include "sessrec/loss.hpp"
#include "sessrec/nn/embedding.hpp"
#include "sessrec/nn/fusion.hpp"
#include "sessrec/types.hpp"

namespace sessrec::srgnn {

/**
 * Directed graph of one session prefix. Adjacency weights are edge
 * occurrence counts normalized by the node's total outgoing (incoming)
 * occurrences, so every non-empty row sums to 1.
 */
struct SessionGraph {
  std::vector<vocab_id> nodes;  // distinct ids in first-appearance order
  matrix_t out_adjacency;       // n x n
  matrix_t in_adjacency;        // n x n
  std::vector<int> alias;       // sequence position -> node index
  int last_node = 0;

  index_t size() const { return static_cast<index_t>(nodes.size()); }
};

/** Prefix must be non-empty and free of pad IDs. */
SessionGraph build_session_graph(std::span<const vocab_id> prefix);

/** Gated propagation weights for one encoder. */
struct PropagationParams {
  ag::Parameter transform;  // d x 2d, applied to [out-aggregate; in-aggregate]
  ag::Parameter bias;       // d x 1
  ag::Parameter update_a, update_v;
  ag::Parameter reset_a, reset_v;
  ag::Parameter cand_a, cand_v;
};

/** Soft-attention readout combining last-item and attention-pooled vectors. */
struct ReadoutParams {
  ag::Parameter q;       // F x 1
  ag::Parameter w_last;  // F x F
  ag::Parameter w_each;  // F x F
  ag::Parameter bias;    // F x 1
  ag::Parameter merge;   // F x 2F
};

struct ModelConfig {
  index_t item_vocab = 0;
  index_t side_vocab = 0;
  index_t embedding_dim = 100;
  index_t side_dim = 100;
  bool use_side = false;
  int propagation_steps = 1;
  std::uint64_t init_seed = 42;

  index_t fused_dim() const { return use_side ? embedding_dim + side_dim : embedding_dim; }
  void validate() const;
};

struct Params {
  nn::EmbeddingTable item_embeddings;
  nn::EmbeddingTable side_embeddings;
  PropagationParams item_propagation;
  PropagationParams side_propagation;
  ReadoutParams readout;

  template <class F>
  void visit(F&& f) {
    auto prop = [&](PropagationParams& p) {
      f(p.transform);
      f(p.bias);
      f(p.update_a);
      f(p.update_v);
      f(p.reset_a);
      f(p.reset_v);
      f(p.cand_a);
      f(p.cand_v);
    };
    f(item_embeddings.table);
    if (side_embeddings.table.value.size() > 0) f(side_embeddings.table);
    prop(item_propagation);
    if (side_propagation.transform.value.size() > 0) prop(side_propagation);
    f(readout.q);
    f(readout.w_last);
    f(readout.w_each);
    f(readout.bias);
    f(readout.merge);
  }
};

/**
 * Graph-propagation recommender. Each prefix becomes a session graph
 * whose node vectors are refined by gated propagation; per-position
 * vectors (item and, optionally, side) feed a soft-attention readout whose
 * hybrid embedding scores every non-pad item by dot product.
 *
 * Side information is restricted to one category per item.
 */
class Srgnn {
 public:
  Srgnn(ModelConfig cfg, std::vector<SideValue> side_map);

  const ModelConfig& config() const { return cfg_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }
  const std::vector<SideValue>& side_map() const { return side_map_; }

  LossBreakdown batch_loss(std::span<const data::Session> batch, scalar_t attention_weight) const;
  LossBreakdown batch_loss_grad(std::span<const data::Session> batch, scalar_t attention_weight);

  /** Distribution over the item vocabulary (pad gets exactly zero). */
  vector_t predict(const data::TrainingExample& example) const;

  /** result[k] = distribution predicting items[k+1]. */
  std::vector<vector_t> score_prefixes(const data::Session& session) const;

  template <class F>
  void visit_params(F&& f) {
    params_.visit(std::forward<F>(f));
  }

  void zero_grads();

 private:
  ModelConfig cfg_;
  std::vector<SideValue> side_map_;
  matrix_t side_mix_;
  Params params_;
};

// ---- operation-level entry points (forward only) ----

/** `node_vectors` and the result hold one node per row. Requires steps >= 1. */
matrix_t propagate(const SessionGraph& graph, const matrix_t& node_vectors,
                   const PropagationParams& params, int steps);

/**
 * Hybrid session embedding from node vectors: raw (unnormalized)
 * attention against the last node, pooled, then merged with the last
 * node's vector.
 */
vector_t session_readout(const matrix_t& node_vectors, const SessionGraph& graph,
                         const ReadoutParams& params);

/** Softmax over every non-pad candidate row scored against `session_vec`. */
vector_t score_and_normalize(const vector_t& session_vec, const matrix_t& candidates);

/**
 * Cross entropy with both terms over the candidate set: the target's
 * log-probability plus every other item's log(1 - p), probabilities
 * clamped to [1e-12, 1 - 1e-12]. Pad is excluded; a pad target throws.
 */
scalar_t cross_entropy_loss(const vector_t& y_hat, vocab_id target);

/** Mean over a batch of predictions. */
scalar_t cross_entropy_loss(std::span<const vector_t> y_hats, std::span<const vocab_id> targets);

}  // namespace sessrec::srgnn
