#include "sessrec/attnreg/attention_reg.hpp"

#include <algorithm>
#include <cmath>

#include "sessrec/errors.hpp"

namespace sessrec::attnreg {

namespace {

constexpr scalar_t kLogFloor = 1e-12;

// Both sets are sorted ascending.
bool sides_match(const SideValue& a, const SideValue& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j)
      ++i;
    else
      ++j;
  }
  return false;
}

scalar_t weighted_log_loss(const vector_t& alpha, const vector_t& target) {
  if (alpha.size() != target.size()) throw ShapeError("attention_loss: weight length mismatch");
  scalar_t loss = 0;
  for (index_t t = 0; t < alpha.size(); ++t) {
    if (target(t) == 0) continue;
    loss -= target(t) * std::log(std::max(alpha(t), kLogFloor));
  }
  return loss;
}

}  // namespace

vector_t item_target(std::span<const vocab_id> prefix_items, vocab_id target_item) {
  vector_t out = vector_t::Zero(static_cast<index_t>(prefix_items.size()));
  index_t hits = 0;
  for (vocab_id item : prefix_items)
    if (item == target_item) ++hits;
  if (hits == 0) return out;
  for (index_t t = 0; t < out.size(); ++t)
    if (prefix_items[static_cast<std::size_t>(t)] == target_item)
      out(t) = scalar_t(1) / static_cast<scalar_t>(hits);
  return out;
}

vector_t side_target(std::span<const SideValue> prefix_sides, const SideValue& target_side) {
  vector_t out = vector_t::Zero(static_cast<index_t>(prefix_sides.size()));
  if (target_side.empty()) return out;
  index_t hits = 0;
  for (const SideValue& s : prefix_sides)
    if (sides_match(s, target_side)) ++hits;
  if (hits == 0) return out;
  for (index_t t = 0; t < out.size(); ++t)
    if (sides_match(prefix_sides[static_cast<std::size_t>(t)], target_side))
      out(t) = scalar_t(1) / static_cast<scalar_t>(hits);
  return out;
}

vector_t combined_target(std::span<const vocab_id> prefix_items,
                         std::span<const SideValue> prefix_sides, vocab_id target_item,
                         const SideValue& side_target_value, bool use_side) {
  vector_t target = item_target(prefix_items, target_item);
  if (!use_side) return target;
  if (prefix_sides.size() != prefix_items.size())
    throw ShapeError("combined_target: side sequence length mismatch");
  return 0.5 * (target + side_target(prefix_sides, side_target_value));
}

scalar_t attention_loss(const vector_t& alpha, std::span<const vocab_id> prefix_items,
                        vocab_id target_item) {
  return weighted_log_loss(alpha, item_target(prefix_items, target_item));
}

scalar_t attention_loss(const vector_t& alpha, std::span<const vocab_id> prefix_items,
                        std::span<const SideValue> prefix_sides, vocab_id target_item,
                        const SideValue& side_target_value) {
  return weighted_log_loss(
      alpha, combined_target(prefix_items, prefix_sides, target_item, side_target_value, true));
}

}  // namespace sessrec::attnreg
