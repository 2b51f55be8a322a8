#include "sessrec/nn/fusion.hpp"

#include "sessrec/errors.hpp"

namespace sessrec::nn {

FusedHiddenSequence fuse(std::span<const vector_t> item_hidden,
                         std::span<const vector_t> side_hidden, const mask_t& mask) {
  if (item_hidden.size() != side_hidden.size() || item_hidden.size() != mask.size())
    throw ShapeError("fuse: sequence length mismatch");
  FusedHiddenSequence out;
  out.mask = mask;
  out.h.reserve(item_hidden.size());
  for (std::size_t t = 0; t < item_hidden.size(); ++t) {
    if (!item_hidden.empty() && item_hidden[t].size() != item_hidden[0].size())
      throw ShapeError("fuse: ragged item dimensions");
    if (side_hidden[t].size() != side_hidden[0].size())
      throw ShapeError("fuse: ragged side dimensions");
    vector_t v(item_hidden[t].size() + side_hidden[t].size());
    if (mask[t]) {
      v << item_hidden[t], side_hidden[t];
    } else {
      v.setZero();
    }
    out.h.push_back(std::move(v));
  }
  return out;
}

FusedHiddenSequence fuse(std::span<const vector_t> item_hidden, const mask_t& mask) {
  if (item_hidden.size() != mask.size()) throw ShapeError("fuse: sequence length mismatch");
  FusedHiddenSequence out;
  out.mask = mask;
  out.h.reserve(item_hidden.size());
  for (std::size_t t = 0; t < item_hidden.size(); ++t) {
    if (mask[t])
      out.h.push_back(item_hidden[t]);
    else
      out.h.push_back(vector_t::Zero(item_hidden[t].size()));
  }
  return out;
}

matrix_t side_mix_matrix(std::span<const SideValue> side_map, index_t side_vocab_size) {
  matrix_t m = matrix_t::Zero(static_cast<index_t>(side_map.size()), side_vocab_size);
  for (std::size_t i = 0; i < side_map.size(); ++i) {
    const SideValue& side = side_map[i];
    if (side.empty()) continue;
    const scalar_t w = scalar_t(1) / static_cast<scalar_t>(side.size());
    for (vocab_id id : side) {
      if (id < 0 || id >= side_vocab_size) throw ShapeError("side_mix_matrix: side id out of range");
      m(static_cast<index_t>(i), id) += w;
    }
  }
  return m;
}

matrix_t fused_candidates(const EmbeddingTable& items, const EmbeddingTable* sides,
                          std::span<const SideValue> side_map) {
  if (!sides) return items.table.value;
  if (static_cast<index_t>(side_map.size()) != items.vocab_size())
    throw ShapeError("fused_candidates: side map must cover the item vocabulary");
  matrix_t out(items.vocab_size(), items.dim() + sides->dim());
  out.leftCols(items.dim()) = items.table.value;
  out.rightCols(sides->dim()) =
      side_mix_matrix(side_map, sides->vocab_size()) * sides->table.value;
  return out;
}

}  // namespace sessrec::nn
