#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sessrec/data/events.hpp"
#include "sessrec/types.hpp"

namespace sessrec::data {

/** A session over raw (string) keys, before vocabulary assignment. */
struct RawSession {
  std::string user;
  std::vector<std::string> items;
  std::vector<std::vector<std::string>> sides;  // parallel to items
};

/** A session over vocabulary IDs. */
struct Session {
  std::string user;
  std::vector<vocab_id> items;
  std::vector<SideValue> sides;  // parallel to items; empty SideValue when no side

  std::size_t length() const { return items.size(); }
};

/** Prefix/target pair with fixed-width zero padding. */
struct TrainingExample {
  std::vector<vocab_id> input;            // length = profile.session_length, 0-padded
  std::vector<SideValue> side_input;  // parallel, empty sets past the prefix
  vocab_id target = 0;
  SideValue side_target;
  int prefix_len = 0;
};

/**
 * Bijections between raw keys and contiguous IDs starting at 1.
 * ID 0 is the padding slot in both tables and maps to no raw key.
 */
struct Vocabulary {
  std::unordered_map<std::string, vocab_id> item_to_id;
  std::vector<std::string> id_to_item;  // index 0 is the pad slot ("")
  std::vector<std::int64_t> item_counts;

  std::unordered_map<std::string, vocab_id> side_to_id;
  std::vector<std::string> id_to_side;

  index_t item_vocab_size() const { return static_cast<index_t>(id_to_item.size()); }
  index_t side_vocab_size() const { return static_cast<index_t>(id_to_side.size()); }
};

/**
 * Splits each user's event stream into sessions. A session's duration
 * window is anchored at its first event; an event at or past the window,
 * or past the length cap, closes the session and anchors a new one.
 * Sessions shorter than 2 are dropped.
 */
std::vector<RawSession> sessionize(std::span<const Event> events, const DatasetProfile& profile);

/**
 * Removes items whose occurrence count across all sessions is below
 * `min_count` (one pass), then drops sessions that fall under length 2.
 */
std::vector<RawSession> filter_rare_items(const std::vector<RawSession>& sessions, int min_count);

/** Assigns IDs in first-appearance order. Rejects an empty session list. */
Vocabulary build_vocab(const std::vector<RawSession>& sessions);

/** Rewrites raw sessions into ID space; side sets are sorted ascending. */
std::vector<Session> encode_sessions(const std::vector<RawSession>& sessions, const Vocabulary& vocab);

/**
 * Seeded shuffle, then split at floor((1-test_fraction)*N).
 * Requires 0 < test_fraction < 1 and at least 2 sessions.
 */
std::pair<std::vector<Session>, std::vector<Session>> split_train_test(std::vector<Session> sessions,
                                                                       double test_fraction,
                                                                       std::uint64_t seed);

/** Expands a session of length n into its n-1 prefix/target examples. */
std::vector<TrainingExample> expand_prefixes(const Session& session, int session_length);

/**
 * Reassembles sessions from prefix-expanded examples: a maximal run where
 * each example extends the previous prefix by its target forms one session.
 * Isolated examples become single-step sessions of their own.
 */
std::vector<Session> group_examples(std::span<const TrainingExample> examples);

/**
 * First-seen side value per item ID (index 0 unused). Needed to score
 * candidates as (item, side) pairs.
 */
std::vector<SideValue> side_map_from_sessions(const std::vector<Session>& sessions,
                                              index_t item_vocab_size);

}  // namespace sessrec::data
