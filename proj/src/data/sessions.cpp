#include "sessrec/data/sessions.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace sessrec::data {

std::vector<RawSession> sessionize(std::span<const Event> events, const DatasetProfile& profile) {
  profile.validate();
  std::vector<RawSession> out;
  RawSession current;
  std::int64_t anchor = 0;

  auto flush = [&] {
    if (current.items.size() >= 2) out.push_back(std::move(current));
    current = RawSession{};
  };

  for (const Event& e : events) {
    const bool same_user = !current.items.empty() && current.user == e.user;
    const bool in_window = same_user && (e.timestamp - anchor) < profile.session_duration;
    const bool has_room = same_user && current.items.size() < static_cast<std::size_t>(profile.session_length);
    if (!(same_user && in_window && has_room)) {
      flush();
      current.user = e.user;
      anchor = e.timestamp;
    }
    current.items.push_back(e.item);
    current.sides.push_back(e.side);
  }
  flush();
  return out;
}

std::vector<RawSession> filter_rare_items(const std::vector<RawSession>& sessions, int min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const RawSession& s : sessions)
    for (const std::string& item : s.items) ++counts[item];

  std::vector<RawSession> out;
  out.reserve(sessions.size());
  for (const RawSession& s : sessions) {
    RawSession kept;
    kept.user = s.user;
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      if (counts[s.items[i]] >= min_count) {
        kept.items.push_back(s.items[i]);
        kept.sides.push_back(s.sides[i]);
      }
    }
    if (kept.items.size() >= 2) out.push_back(std::move(kept));
  }
  return out;
}

Vocabulary build_vocab(const std::vector<RawSession>& sessions) {
  if (sessions.empty()) throw ConfigError("cannot build a vocabulary from zero sessions");
  Vocabulary v;
  v.id_to_item.emplace_back();  // pad slot
  v.id_to_side.emplace_back();
  v.item_counts.push_back(0);
  for (const RawSession& s : sessions) {
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      auto [it, fresh] = v.item_to_id.try_emplace(s.items[i], static_cast<vocab_id>(v.id_to_item.size()));
      if (fresh) {
        v.id_to_item.push_back(s.items[i]);
        v.item_counts.push_back(0);
      }
      ++v.item_counts[it->second];
      for (const std::string& side : s.sides[i]) {
        auto [sit, side_fresh] =
            v.side_to_id.try_emplace(side, static_cast<vocab_id>(v.id_to_side.size()));
        if (side_fresh) v.id_to_side.push_back(side);
        (void)sit;
      }
    }
  }
  return v;
}

std::vector<Session> encode_sessions(const std::vector<RawSession>& sessions, const Vocabulary& vocab) {
  std::vector<Session> out;
  out.reserve(sessions.size());
  for (const RawSession& raw : sessions) {
    Session s;
    s.user = raw.user;
    s.items.reserve(raw.items.size());
    s.sides.reserve(raw.items.size());
    for (std::size_t i = 0; i < raw.items.size(); ++i) {
      s.items.push_back(vocab.item_to_id.at(raw.items[i]));
      SideValue ids;
      for (const std::string& side : raw.sides[i]) ids.push_back(vocab.side_to_id.at(side));
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      s.sides.push_back(std::move(ids));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<std::vector<Session>, std::vector<Session>> split_train_test(std::vector<Session> sessions,
                                                                       double test_fraction,
                                                                       std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie strictly between 0 and 1");
  if (sessions.size() < 2) throw ConfigError("need at least 2 sessions to split");
  std::mt19937_64 rng(seed);
  std::shuffle(sessions.begin(), sessions.end(), rng);
  const std::size_t train_n =
      static_cast<std::size_t>(std::floor((1.0 - test_fraction) * static_cast<double>(sessions.size())));
  std::vector<Session> train(sessions.begin(), sessions.begin() + train_n);
  std::vector<Session> test(sessions.begin() + train_n, sessions.end());
  return {std::move(train), std::move(test)};
}

std::vector<TrainingExample> expand_prefixes(const Session& session, int session_length) {
  const int n = static_cast<int>(session.items.size());
  if (n < 2) throw std::invalid_argument("cannot expand a session shorter than 2");
  if (n > session_length) throw std::invalid_argument("session longer than the configured length");
  std::vector<TrainingExample> out;
  out.reserve(n - 1);
  for (int i = 1; i < n; ++i) {
    TrainingExample ex;
    ex.input.assign(session_length, 0);
    ex.side_input.assign(session_length, SideValue{});
    for (int k = 0; k < i; ++k) {
      ex.input[k] = session.items[k];
      ex.side_input[k] = session.sides[k];
    }
    ex.target = session.items[i];
    ex.side_target = session.sides[i];
    ex.prefix_len = i;
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

bool extends(const TrainingExample& prev, const TrainingExample& next) {
  if (next.prefix_len != prev.prefix_len + 1) return false;
  if (next.prefix_len > static_cast<int>(next.input.size())) return false;
  if (next.input[prev.prefix_len] != prev.target) return false;
  for (int k = 0; k < prev.prefix_len; ++k)
    if (next.input[k] != prev.input[k]) return false;
  return true;
}

Session session_from_example(const TrainingExample& ex) {
  Session s;
  s.items.assign(ex.input.begin(), ex.input.begin() + ex.prefix_len);
  s.sides.assign(ex.side_input.begin(), ex.side_input.begin() + ex.prefix_len);
  s.items.push_back(ex.target);
  s.sides.push_back(ex.side_target);
  return s;
}

}  // namespace

std::vector<Session> group_examples(std::span<const TrainingExample> examples) {
  std::vector<Session> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!out.empty() && i > 0 && extends(examples[i - 1], examples[i])) {
      Session& s = out.back();
      s.items.push_back(examples[i].target);
      s.sides.push_back(examples[i].side_target);
    } else {
      out.push_back(session_from_example(examples[i]));
    }
  }
  return out;
}

std::vector<SideValue> side_map_from_sessions(const std::vector<Session>& sessions,
                                              index_t item_vocab_size) {
  std::vector<SideValue> map(static_cast<std::size_t>(item_vocab_size));
  for (const Session& s : sessions)
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      SideValue& slot = map[static_cast<std::size_t>(s.items[i])];
      if (slot.empty() && !s.sides[i].empty()) slot = s.sides[i];
    }
  return map;
}

}  // namespace sessrec::data
