#include "sessrec/train/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sessrec::train {

int rank_of_target(const vector_t& scores, vocab_id target) {
  if (target <= 0 || target >= scores.size())
    throw std::invalid_argument("rank_of_target: target outside the vocabulary");
  const scalar_t ts = scores(target);
  int rank = 1;
  for (index_t i = 1; i < scores.size(); ++i) {
    if (i == target) continue;
    if (scores(i) > ts || (scores(i) == ts && i < target)) ++rank;
  }
  return rank;
}

std::vector<vocab_id> ranked_items(const vector_t& scores) {
  std::vector<vocab_id> ids(static_cast<std::size_t>(scores.size() - 1));
  std::iota(ids.begin(), ids.end(), 1);
  std::sort(ids.begin(), ids.end(), [&](vocab_id a, vocab_id b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  return ids;
}

namespace {

int rank_in_list(const std::vector<vocab_id>& ranking, vocab_id target) {
  for (std::size_t i = 0; i < ranking.size(); ++i)
    if (ranking[i] == target) return static_cast<int>(i) + 1;
  throw std::invalid_argument("ranking does not contain the target item");
}

void check_metric_inputs(std::size_t n_rankings, std::size_t n_targets, int k) {
  if (k < 1) throw std::invalid_argument("metrics need k >= 1");
  if (n_rankings == 0) throw std::invalid_argument("metrics over an empty example set");
  if (n_rankings != n_targets) throw std::invalid_argument("rankings/targets size mismatch");
}

}  // namespace

scalar_t recall_at_k(const std::vector<std::vector<vocab_id>>& rankings,
                     std::span<const vocab_id> targets, int k) {
  check_metric_inputs(rankings.size(), targets.size(), k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i)
    if (rank_in_list(rankings[i], targets[i]) <= k) ++hits;
  return static_cast<scalar_t>(hits) / static_cast<scalar_t>(rankings.size());
}

scalar_t mrr_at_k(const std::vector<std::vector<vocab_id>>& rankings,
                  std::span<const vocab_id> targets, int k) {
  check_metric_inputs(rankings.size(), targets.size(), k);
  scalar_t total = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const int rank = rank_in_list(rankings[i], targets[i]);
    if (rank <= k) total += scalar_t(1) / static_cast<scalar_t>(rank);
  }
  return total / static_cast<scalar_t>(rankings.size());
}

scalar_t recall_from_ranks(std::span<const int> ranks, int k) {
  if (k < 1 || ranks.empty()) throw std::invalid_argument("metrics over an empty example set");
  std::size_t hits = 0;
  for (int r : ranks)
    if (r <= k) ++hits;
  return static_cast<scalar_t>(hits) / static_cast<scalar_t>(ranks.size());
}

scalar_t mrr_from_ranks(std::span<const int> ranks, int k) {
  if (k < 1 || ranks.empty()) throw std::invalid_argument("metrics over an empty example set");
  scalar_t total = 0;
  for (int r : ranks)
    if (r <= k) total += scalar_t(1) / static_cast<scalar_t>(r);
  return total / static_cast<scalar_t>(ranks.size());
}

}  // namespace sessrec::train
