#pragma once

#include <vector>

#include "sessrec/data/events.hpp"
#include "sessrec/types.hpp"

namespace sessrec::train {

/**
 * Generator of category-sticky, repeat-prone browsing sessions. Items are
 * partitioned evenly into categories; each step repeats an earlier
 * in-session item with probability `repeat_prob`, otherwise draws from
 * the current item's category with probability `category_stickiness`, and
 * otherwise hops to a uniformly random category.
 */
struct SynthConfig {
  int n_items = 500;
  int n_categories = 20;
  scalar_t category_stickiness = 0.9;
  scalar_t repeat_prob = 0.2;
  int n_sessions = 5000;
  int min_session_len = 4;
  int max_session_len = 10;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SynthData {
  std::vector<data::Event> events;   // one user per session, consumable by the preprocessor
  std::vector<int> category_of;     // 0-based item index -> category
};

SynthData synth_generate(const SynthConfig& config);

}  // namespace sessrec::train
