#pragma once

#include <random>
#include <string>

#include "sessrec/ag/tape.hpp"
#include "sessrec/types.hpp"

namespace sessrec::nn {

/**
 * Learnable lookup table of shape (vocab_size, dim). Row 0 is the pad
 * slot: it is all zeros and never touched by gradient updates (nothing
 * ever looks it up on a differentiable path).
 */
struct EmbeddingTable {
  ag::Parameter table;

  index_t vocab_size() const { return table.value.rows(); }
  index_t dim() const { return table.value.cols(); }
};

EmbeddingTable make_embedding(std::string name, index_t vocab_size, index_t dim,
                              std::mt19937_64& rng);

/** Row lookup; row 0 gives the zero vector. Out-of-range throws. */
vector_t embed(const EmbeddingTable& table, vocab_id id);

/** Mean of the member rows of a non-empty ID set. */
vector_t embed(const EmbeddingTable& table, const SideValue& ids);

}  // namespace sessrec::nn
