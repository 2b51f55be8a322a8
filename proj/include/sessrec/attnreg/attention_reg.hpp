#pragma once

#include <span>

#include "sessrec/types.hpp"

namespace sessrec::attnreg {

/**
 * Target attention weights over prefix steps: 1/k at each of the k
 * positions holding the target item, zero elsewhere. All-zero when the
 * target does not appear.
 */
vector_t item_target(std::span<const vocab_id> prefix_items, vocab_id target_item);

/**
 * Same over side values. Two side values match when their ID sets
 * intersect; the denominator counts matching positions.
 */
vector_t side_target(std::span<const SideValue> prefix_sides, const SideValue& target_side);

/**
 * Per-prefix regularization target fed to the loss: the item and side
 * targets averaged when side information participates, the item target
 * alone otherwise.
 */
vector_t combined_target(std::span<const vocab_id> prefix_items,
                         std::span<const SideValue> prefix_sides, vocab_id target_item,
                         const SideValue& side_target_value, bool use_side);

/**
 * -sum_t target_t * log(alpha_t) with alpha clamped below at 1e-12.
 * Zero targets contribute nothing regardless of alpha.
 */
scalar_t attention_loss(const vector_t& alpha, std::span<const vocab_id> prefix_items,
                        vocab_id target_item);

scalar_t attention_loss(const vector_t& alpha, std::span<const vocab_id> prefix_items,
                        std::span<const SideValue> prefix_sides, vocab_id target_item,
                        const SideValue& side_target_value);

}  // namespace sessrec::attnreg
