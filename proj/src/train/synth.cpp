#include "sessrec/train/synth.hpp"

#include <random>

#include "sessrec/errors.hpp"

namespace sessrec::train {

void SynthConfig::validate() const {
  if (n_categories < 1 || n_items < n_categories)
    throw ConfigError("need n_items >= n_categories >= 1");
  if (category_stickiness < 0 || category_stickiness > 1)
    throw ConfigError("category_stickiness must lie in [0, 1]");
  if (repeat_prob < 0 || repeat_prob > 1) throw ConfigError("repeat_prob must lie in [0, 1]");
  if (n_sessions < 1) throw ConfigError("n_sessions must be positive");
  if (min_session_len < 2 || max_session_len < min_session_len)
    throw ConfigError("session length range must satisfy 2 <= min <= max");
}

SynthData synth_generate(const SynthConfig& config) {
  config.validate();
  SynthData out;
  out.category_of.resize(static_cast<std::size_t>(config.n_items));
  std::vector<std::vector<int>> members(static_cast<std::size_t>(config.n_categories));
  for (int i = 0; i < config.n_items; ++i) {
    const int c = static_cast<int>(static_cast<long long>(i) * config.n_categories / config.n_items);
    out.category_of[static_cast<std::size_t>(i)] = c;
    members[static_cast<std::size_t>(c)].push_back(i);
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<scalar_t> coin(0.0, 1.0);
  auto draw_from = [&](int category) {
    const auto& pool = members[static_cast<std::size_t>(category)];
    return pool[rng() % pool.size()];
  };

  std::string item_name, side_name;
  for (int s = 0; s < config.n_sessions; ++s) {
    const int len = config.min_session_len +
                    static_cast<int>(rng() % static_cast<std::uint64_t>(
                                               config.max_session_len - config.min_session_len + 1));
    std::vector<int> history;
    int category = static_cast<int>(rng() % static_cast<std::uint64_t>(config.n_categories));
    for (int step = 0; step < len; ++step) {
      int item;
      if (step == 0) {
        item = draw_from(category);
      } else if (coin(rng) < config.repeat_prob) {
        item = history[rng() % history.size()];
      } else {
        if (coin(rng) >= config.category_stickiness)
          category = static_cast<int>(rng() % static_cast<std::uint64_t>(config.n_categories));
        item = draw_from(category);
      }
      history.push_back(item);
      category = out.category_of[static_cast<std::size_t>(item)];

      data::Event e;
      e.user = "u" + std::to_string(s);
      e.timestamp = static_cast<std::int64_t>(step);
      e.item = "item" + std::to_string(item + 1);
      e.side = {"cat" + std::to_string(out.category_of[static_cast<std::size_t>(item)] + 1)};
      out.events.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace sessrec::train
