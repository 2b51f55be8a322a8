#include "sessrec/io/model_io.hpp"

namespace sessrec::io {

repeatnet::ModelConfig repeatnet_config(const train::TrainConfig& cfg, index_t item_vocab,
                                        index_t side_vocab) {
  repeatnet::ModelConfig m;
  m.item_vocab = item_vocab;
  m.side_vocab = cfg.use_side ? side_vocab : 0;
  m.embedding_dim = cfg.embedding_dim;
  m.side_dim = cfg.side_dim;
  m.hidden_dim = cfg.hidden_dim;
  m.use_side = cfg.use_side;
  m.init_seed = cfg.seed;
  return m;
}

srgnn::ModelConfig srgnn_config(const train::TrainConfig& cfg, index_t item_vocab,
                                index_t side_vocab) {
  srgnn::ModelConfig m;
  m.item_vocab = item_vocab;
  m.side_vocab = cfg.use_side ? side_vocab : 0;
  m.embedding_dim = cfg.embedding_dim;
  m.side_dim = cfg.side_dim;
  m.use_side = cfg.use_side;
  m.propagation_steps = cfg.propagation_steps;
  m.init_seed = cfg.seed;
  return m;
}

}  // namespace sessrec::io
