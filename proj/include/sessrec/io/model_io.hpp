#pragma once

#include "sessrec/io/checkpoint.hpp"
#include "sessrec/models/repeatnet.hpp"
#include "sessrec/models/srgnn.hpp"
#include "sessrec/train/fit.hpp"

namespace sessrec::io {

repeatnet::ModelConfig repeatnet_config(const train::TrainConfig& cfg, index_t item_vocab,
                                        index_t side_vocab);

srgnn::ModelConfig srgnn_config(const train::TrainConfig& cfg, index_t item_vocab,
                                index_t side_vocab);

template <class Model>
std::vector<NamedTensor> dump_tensors(Model& model) {
  std::vector<NamedTensor> out;
  model.visit_params([&](ag::Parameter& p) { out.push_back({p.name, p.value}); });
  return out;
}

/** Restores parameter values by name; every parameter must be present. */
template <class Model>
void load_tensors(Model& model, const std::vector<NamedTensor>& tensors) {
  model.visit_params([&](ag::Parameter& p) {
    for (const NamedTensor& t : tensors) {
      if (t.name != p.name) continue;
      if (t.value.rows() != p.value.rows() || t.value.cols() != p.value.cols())
        throw DataError("checkpoint tensor '" + t.name + "' has an unexpected shape");
      p.value = t.value;
      return;
    }
    throw DataError("checkpoint is missing tensor '" + p.name + "'");
  });
}

}  // namespace sessrec::io
