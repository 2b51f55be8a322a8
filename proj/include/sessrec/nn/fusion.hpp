#pragma once

#include <span>
#include <vector>

#include "sessrec/nn/embedding.hpp"
#include "sessrec/types.hpp"

namespace sessrec::nn {

/**
 * Per-timestep hidden vectors with an item half and (optionally) a side
 * half stacked below it. Masked positions hold exact zero vectors.
 */
struct FusedHiddenSequence {
  std::vector<vector_t> h;
  mask_t mask;

  index_t dim() const { return h.empty() ? 0 : h.front().size(); }
  std::size_t length() const { return h.size(); }
};

/**
 * Concatenates item and side hidden states position by position, item
 * half first. Lengths and dimensions must agree; masked positions are
 * zeroed.
 */
FusedHiddenSequence fuse(std::span<const vector_t> item_hidden,
                         std::span<const vector_t> side_hidden, const mask_t& mask);

/** Side branch disabled: the item hidden states pass through unchanged. */
FusedHiddenSequence fuse(std::span<const vector_t> item_hidden, const mask_t& mask);

/**
 * Row-averaging map M (n_items x side_vocab): M * side_table gives each
 * item the mean embedding of its side-value set. Items without a side
 * value (including the pad slot) get a zero row.
 */
matrix_t side_mix_matrix(std::span<const SideValue> side_map, index_t side_vocab_size);

/**
 * Candidate scoring table: one row per item holding its embedding, with
 * the mean side embedding of the item's side-value set appended when a
 * side table is given (pass nullptr to disable the side half).
 */
matrix_t fused_candidates(const EmbeddingTable& items, const EmbeddingTable* sides,
                          std::span<const SideValue> side_map);

}  // namespace sessrec::nn
