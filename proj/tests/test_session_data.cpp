#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sessrec/data/dataset_io.hpp"
#include "sessrec/data/events.hpp"
#include "sessrec/data/sessions.hpp"

using namespace sessrec;
using namespace sessrec::data;

namespace {

Event ev(std::string user, std::int64_t ts, std::string item, std::vector<std::string> side = {}) {
  return Event{std::move(user), ts, std::move(item), std::move(side)};
}

RawSession raw(std::vector<std::string> items) {
  RawSession s;
  s.user = "u";
  s.items = std::move(items);
  s.sides.assign(s.items.size(), {});
  return s;
}

DatasetProfile no_side_profile(std::int64_t duration, int length) {
  DatasetProfile p;
  p.session_duration = duration;
  p.session_length = length;
  p.side_kind = SideKind::none;
  return p;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sessrec_test_" + name);
}

}  // namespace

TEST_CASE("parse_events keeps well-formed rows in timestamp order") {
  std::istringstream in("user,timestamp,item\nu1,5,a\nu1,3,b\nu1,9,c\n");
  auto result = parse_events(in, no_side_profile(100, 10), ColumnMap{});
  REQUIRE(result.events.size() == 3);
  CHECK(result.skipped == 0);
  CHECK(result.events[0].item == "b");
  CHECK(result.events[1].item == "a");
  CHECK(result.events[2].item == "c");
}

TEST_CASE("parse_events reorders [100, 50] to [50, 100]") {
  std::istringstream in("user,timestamp,item\nu1,100,a\nu1,50,b\n");
  auto result = parse_events(in, no_side_profile(100, 10), ColumnMap{});
  REQUIRE(result.events.size() == 2);
  CHECK(result.events[0].timestamp == 50);
  CHECK(result.events[1].timestamp == 100);
}

TEST_CASE("parse_events skips a row missing the item column") {
  std::istringstream in("user,timestamp,item\nu1,5,a\nu1,6\nu1,7,c\n");
  auto result = parse_events(in, no_side_profile(100, 10), ColumnMap{});
  CHECK(result.events.size() == 2);
  CHECK(result.skipped == 1);
}

TEST_CASE("parse_events stable-sorts equal timestamps by row order") {
  std::istringstream in("user,timestamp,item\nu1,5,first\nu1,5,second\nu1,5,third\n");
  auto result = parse_events(in, no_side_profile(100, 10), ColumnMap{});
  REQUIRE(result.events.size() == 3);
  CHECK(result.events[0].item == "first");
  CHECK(result.events[2].item == "third");
}

TEST_CASE("parse_events error paths") {
  DatasetProfile p = no_side_profile(100, 10);
  SUBCASE("missing configured column") {
    std::istringstream in("user,timestamp,item\nu1,5,a\n");
    ColumnMap cm;
    cm.item = "nonexistent";
    CHECK_THROWS_AS((void)parse_events(in, p, cm), ConfigError);
  }
  SUBCASE("more than half malformed") {
    std::istringstream in("user,timestamp,item\nu1,notatime,a\nu1,bad,b\nu1,7,c\n");
    CHECK_THROWS_AS((void)parse_events(in, p, ColumnMap{}), DataError);
  }
  SUBCASE("negative timestamps are malformed") {
    std::istringstream in("user,timestamp,item\nu1,-5,a\nu1,6,b\nu1,7,c\n");
    auto result = parse_events(in, p, ColumnMap{});
    CHECK(result.skipped == 1);
    CHECK(result.events.size() == 2);
  }
  SUBCASE("headerless input with numeric columns") {
    std::istringstream in("u1\t5\ta\nu1\t6\tb\n");
    ColumnMap cm;
    cm.delimiter = '\t';
    cm.has_header = false;
    cm.user = "0";
    cm.time = "1";
    cm.item = "2";
    auto result = parse_events(in, p, cm);
    CHECK(result.events.size() == 2);
  }
}

TEST_CASE("parse_events splits multi-valued side fields") {
  DatasetProfile p = no_side_profile(100, 10);
  p.side_kind = SideKind::multi;
  ColumnMap cm;
  cm.side = "genres";
  std::istringstream in("user,timestamp,item,genres\nu1,5,a,g1|g2\nu1,6,b,g2\n");
  auto result = parse_events(in, p, cm);
  REQUIRE(result.events.size() == 2);
  CHECK(result.events[0].side == std::vector<std::string>{"g1", "g2"});
  CHECK(result.events[1].side == std::vector<std::string>{"g2"});
}

TEST_CASE("sessionize: duration window anchored at first event") {
  // timestamps [0, 100, 50000] with an 8 h window: the third event starts a
  // new session, which is then dropped for being shorter than 2.
  std::vector<Event> events{ev("u", 0, "a"), ev("u", 100, "b"), ev("u", 50000, "c")};
  auto sessions = sessionize(events, no_side_profile(28800, 50));
  REQUIRE(sessions.size() == 1);
  CHECK(sessions[0].items == std::vector<std::string>{"a", "b"});
}

TEST_CASE("sessionize: splits by length, then drops short chunks") {
  std::vector<Event> events;
  for (int i = 0; i < 7; ++i) events.push_back(ev("u", i, "i" + std::to_string(i)));
  auto sessions = sessionize(events, no_side_profile(28800, 3));
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].items.size() == 3);
  CHECK(sessions[1].items.size() == 3);
}

TEST_CASE("sessionize: single event yields nothing") {
  std::vector<Event> events{ev("u", 0, "a")};
  CHECK(sessionize(events, no_side_profile(28800, 50)).empty());
}

TEST_CASE("sessionize: window reaching the exact duration closes the session") {
  std::vector<Event> events{ev("u", 0, "a"), ev("u", 10, "b"), ev("u", 100, "c"), ev("u", 110, "d")};
  auto sessions = sessionize(events, no_side_profile(100, 50));
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].items == std::vector<std::string>{"a", "b"});
  CHECK(sessions[1].items == std::vector<std::string>{"c", "d"});
}

TEST_CASE("filter_rare_items") {
  SUBCASE("min_count 1 is the identity") {
    std::vector<RawSession> in{raw({"a", "b"}), raw({"c", "d"})};
    auto out = filter_rare_items(in, 1);
    REQUIRE(out.size() == 2);
    CHECK(out[0].items == in[0].items);
    CHECK(out[1].items == in[1].items);
  }
  SUBCASE("rare item removal can drop a session") {
    std::vector<RawSession> in{raw({"A", "B"}), raw({"A", "C"}), raw({"A", "B"})};
    auto out = filter_rare_items(in, 2);
    REQUIRE(out.size() == 2);
    CHECK(out[0].items == std::vector<std::string>{"A", "B"});
    CHECK(out[1].items == std::vector<std::string>{"A", "B"});
  }
  SUBCASE("all items rare") {
    std::vector<RawSession> in{raw({"a", "b"})};
    CHECK(filter_rare_items(in, 5).empty());
  }
}

TEST_CASE("build_vocab assigns first-appearance IDs") {
  std::vector<RawSession> sessions{raw({"B", "A", "B"})};
  Vocabulary v = build_vocab(sessions);
  CHECK(v.item_to_id.at("B") == 1);
  CHECK(v.item_to_id.at("A") == 2);
  CHECK(v.item_counts[1] == 2);
  CHECK(v.item_counts[2] == 1);
}

TEST_CASE("build_vocab: one distinct item gives size 2 with pad") {
  std::vector<RawSession> sessions{raw({"x", "x"})};
  Vocabulary v = build_vocab(sessions);
  CHECK(v.item_vocab_size() == 2);
  CHECK(v.id_to_item[0].empty());
}

TEST_CASE("build_vocab: multi-valued sides in appearance order") {
  RawSession s;
  s.user = "u";
  s.items = {"m1", "m2"};
  s.sides = {{"g1", "g2"}, {"g2"}};
  Vocabulary v = build_vocab({s});
  CHECK(v.side_to_id.at("g1") == 1);
  CHECK(v.side_to_id.at("g2") == 2);
  CHECK(v.side_vocab_size() == 3);
}

TEST_CASE("build_vocab rejects an empty session list") {
  CHECK_THROWS_AS((void)build_vocab({}), ConfigError);
}

TEST_CASE("split_train_test") {
  auto sessions_of = [](int n) {
    std::vector<Session> out;
    for (int i = 0; i < n; ++i) {
      Session s;
      s.items = {static_cast<vocab_id>(i + 1), static_cast<vocab_id>(i + 2)};
      s.sides.assign(2, {});
      out.push_back(std::move(s));
    }
    return out;
  };
  SUBCASE("sizes follow floor arithmetic") {
    auto [train, test] = split_train_test(sessions_of(10), 0.1, 42);
    CHECK(train.size() == 9);
    CHECK(test.size() == 1);
  }
  SUBCASE("same seed, same partition") {
    auto [a_train, a_test] = split_train_test(sessions_of(30), 0.2, 7);
    auto [b_train, b_test] = split_train_test(sessions_of(30), 0.2, 7);
    REQUIRE(a_train.size() == b_train.size());
    for (std::size_t i = 0; i < a_train.size(); ++i) CHECK(a_train[i].items == b_train[i].items);
  }
  SUBCASE("different seeds differ on N=100") {
    auto [a_train, a_test] = split_train_test(sessions_of(100), 0.1, 1);
    auto [b_train, b_test] = split_train_test(sessions_of(100), 0.1, 2);
    bool same = true;
    for (std::size_t i = 0; i < a_train.size() && same; ++i) same = a_train[i].items == b_train[i].items;
    CHECK_FALSE(same);
  }
  SUBCASE("too few sessions") {
    CHECK_THROWS_AS((void)split_train_test(sessions_of(1), 0.5, 1), ConfigError);
  }
  SUBCASE("bad fraction") {
    CHECK_THROWS_AS((void)split_train_test(sessions_of(10), 1.0, 1), ConfigError);
  }
}

TEST_CASE("expand_prefixes emits n-1 padded examples") {
  Session s;
  s.items = {5, 7, 9};
  s.sides = {{2}, {2}, {3}};
  auto examples = expand_prefixes(s, 5);
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].input == std::vector<vocab_id>{5, 0, 0, 0, 0});
  CHECK(examples[0].target == 7);
  CHECK(examples[0].prefix_len == 1);
  CHECK(examples[1].input == std::vector<vocab_id>{5, 7, 0, 0, 0});
  CHECK(examples[1].target == 9);
  // parallel side substitution
  CHECK(examples[0].side_input[0] == SideValue{2});
  CHECK(examples[0].side_input[1].empty());
  CHECK(examples[0].side_target == SideValue{2});
  CHECK(examples[1].side_input[1] == SideValue{2});
  CHECK(examples[1].side_target == SideValue{3});
}

TEST_CASE("expand_prefixes: length-2 session gives exactly one example") {
  Session s;
  s.items = {3, 4};
  s.sides = {{}, {}};
  CHECK(expand_prefixes(s, 4).size() == 1);
}

TEST_CASE("prefix property holds over random sessions") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    Session s;
    const int n = 2 + static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) {
      s.items.push_back(static_cast<vocab_id>(1 + rng() % 9));
      s.sides.push_back({static_cast<vocab_id>(1 + rng() % 3)});
    }
    auto examples = expand_prefixes(s, 10);
    CHECK(examples.size() == s.items.size() - 1);
    for (const auto& ex : examples) {
      for (int k = 0; k < ex.prefix_len; ++k) CHECK(ex.input[k] == s.items[k]);
      for (std::size_t k = ex.prefix_len; k < ex.input.size(); ++k) CHECK(ex.input[k] == 0);
      CHECK(ex.target == s.items[ex.prefix_len]);
      CHECK(ex.target > 0);
    }
    // grouping recovers the session
    auto grouped = group_examples(examples);
    REQUIRE(grouped.size() == 1);
    CHECK(grouped[0].items == s.items);
    CHECK(grouped[0].sides == s.sides);
  }
}

TEST_CASE("group_examples starts a new session when the chain breaks") {
  Session a;
  a.items = {1, 2, 3};
  a.sides.assign(3, {});
  Session b;
  b.items = {4, 5};
  b.sides.assign(2, {});
  auto ea = expand_prefixes(a, 6);
  auto eb = expand_prefixes(b, 6);
  std::vector<TrainingExample> all(ea.begin(), ea.end());
  all.insert(all.end(), eb.begin(), eb.end());
  auto grouped = group_examples(all);
  REQUIRE(grouped.size() == 2);
  CHECK(grouped[0].items == a.items);
  CHECK(grouped[1].items == b.items);
}

TEST_CASE("examples file round-trips and is byte-deterministic") {
  Session s;
  s.items = {5, 7, 9};
  s.sides = {{2}, {2, 4}, {3}};
  auto examples = expand_prefixes(s, 5);
  const auto path1 = temp_file("ex1.txt");
  const auto path2 = temp_file("ex2.txt");
  write_examples(path1, examples, SideKind::multi);
  write_examples(path2, examples, SideKind::multi);

  std::ifstream f1(path1, std::ios::binary), f2(path2, std::ios::binary);
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  CHECK(b1.str() == b2.str());
  CHECK(b1.str().find("\r") == std::string::npos);

  auto loaded = read_examples(path1, SideKind::multi);
  REQUIRE(loaded.size() == examples.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].input == examples[i].input);
    CHECK(loaded[i].target == examples[i].target);
    CHECK(loaded[i].side_input == examples[i].side_input);
    CHECK(loaded[i].side_target == examples[i].side_target);
    CHECK(loaded[i].prefix_len == examples[i].prefix_len);
  }
  std::filesystem::remove(path1);
  std::filesystem::remove(path2);
}

TEST_CASE("vocab file round-trips") {
  std::vector<RawSession> sessions{raw({"B", "A", "B"})};
  Vocabulary v = build_vocab(sessions);
  const auto path = temp_file("vocab.txt");
  write_vocab(path, v.id_to_item);
  auto loaded = read_vocab(path);
  REQUIRE(loaded.size() == v.id_to_item.size());
  CHECK(loaded[1] == "B");
  CHECK(loaded[2] == "A");
  std::filesystem::remove(path);
}

TEST_CASE("side map extraction and round-trip") {
  Session s;
  s.items = {1, 2, 1};
  s.sides = {{3}, {4, 5}, {3}};
  auto map = side_map_from_sessions({s}, 4);
  CHECK(map[1] == SideValue{3});
  CHECK(map[2] == SideValue{4, 5});
  CHECK(map[3].empty());
  const auto path = temp_file("sidemap.txt");
  write_side_map(path, map);
  auto loaded = read_side_map(path, 4);
  CHECK(loaded == map);
  std::filesystem::remove(path);
}
