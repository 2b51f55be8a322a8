#pragma once

#include <span>
#include <vector>

#include "sessrec/types.hpp"

namespace sessrec::train {

/**
 * 1-based rank of `target` among the non-pad items of a score vector.
 * Ties are broken by ascending item ID, so rankings are total orders.
 */
int rank_of_target(const vector_t& scores, vocab_id target);

/** Full descending ranking over non-pad items, ties by ascending ID. */
std::vector<vocab_id> ranked_items(const vector_t& scores);

/** Fraction of examples whose target ranks within the top k. */
scalar_t recall_at_k(const std::vector<std::vector<vocab_id>>& rankings,
                     std::span<const vocab_id> targets, int k);

/** Mean reciprocal rank, zeroed beyond the top k. */
scalar_t mrr_at_k(const std::vector<std::vector<vocab_id>>& rankings,
                  std::span<const vocab_id> targets, int k);

scalar_t recall_from_ranks(std::span<const int> ranks, int k);
scalar_t mrr_from_ranks(std::span<const int> ranks, int k);

}  // namespace sessrec::train
