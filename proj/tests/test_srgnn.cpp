#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fd_util.hpp"
#include "oracles.hpp"
#include "sessrec/models/srgnn.hpp"

using namespace sessrec;
using namespace sessrec::srgnn;

namespace {

data::Session sess(std::vector<vocab_id> items, std::vector<SideValue> sides = {}) {
  data::Session s;
  s.items = std::move(items);
  if (sides.empty())
    s.sides.assign(s.items.size(), SideValue{});
  else
    s.sides = std::move(sides);
  return s;
}

std::vector<SideValue> single_side_map(std::mt19937_64& rng, index_t item_vocab, index_t side_vocab) {
  std::vector<SideValue> map(static_cast<std::size_t>(item_vocab));
  for (std::size_t i = 1; i < map.size(); ++i)
    map[i] = {static_cast<vocab_id>(1 + rng() % static_cast<std::uint64_t>(side_vocab - 1))};
  return map;
}

data::Session with_sides(const std::vector<vocab_id>& items, const std::vector<SideValue>& map) {
  data::Session s;
  s.items = items;
  for (vocab_id id : items) s.sides.push_back(map[static_cast<std::size_t>(id)]);
  return s;
}

ModelConfig small_config(bool use_side, std::uint64_t seed = 31) {
  ModelConfig cfg;
  cfg.item_vocab = 10;
  cfg.side_vocab = use_side ? 5 : 0;
  cfg.embedding_dim = 3;
  cfg.side_dim = 2;
  cfg.use_side = use_side;
  cfg.init_seed = seed;
  return cfg;
}

PropagationParams random_prop(std::mt19937_64& rng, index_t d) {
  PropagationParams p;
  p.transform = ag::Parameter("h", testutil::random_matrix(rng, d, 2 * d));
  p.bias = ag::Parameter("b", testutil::random_matrix(rng, d, 1));
  p.update_a = ag::Parameter("wz", testutil::random_matrix(rng, d, d));
  p.update_v = ag::Parameter("uz", testutil::random_matrix(rng, d, d));
  p.reset_a = ag::Parameter("wr", testutil::random_matrix(rng, d, d));
  p.reset_v = ag::Parameter("ur", testutil::random_matrix(rng, d, d));
  p.cand_a = ag::Parameter("wo", testutil::random_matrix(rng, d, d));
  p.cand_v = ag::Parameter("uo", testutil::random_matrix(rng, d, d));
  return p;
}

ReadoutParams random_readout(std::mt19937_64& rng, index_t f) {
  ReadoutParams p;
  p.q = ag::Parameter("q", testutil::random_matrix(rng, f, 1));
  p.w_last = ag::Parameter("w1", testutil::random_matrix(rng, f, f));
  p.w_each = ag::Parameter("w2", testutil::random_matrix(rng, f, f));
  p.bias = ag::Parameter("c", testutil::random_matrix(rng, f, 1));
  p.merge = ag::Parameter("w3", testutil::random_matrix(rng, f, 2 * f));
  return p;
}

}  // namespace

TEST_CASE("session graph: chain with a revisit keeps unit weights") {
  auto g = build_session_graph(std::vector<vocab_id>{1, 2, 3, 2});
  REQUIRE(g.nodes == std::vector<vocab_id>{1, 2, 3});
  CHECK(g.out_adjacency(0, 1) == 1.0);
  CHECK(g.out_adjacency(1, 2) == 1.0);
  CHECK(g.out_adjacency(2, 1) == 1.0);
  CHECK(g.alias == std::vector<int>{0, 1, 2, 1});
  CHECK(g.last_node == 1);
  // node 2 receives from 1 and 3
  CHECK(g.in_adjacency(1, 0) == doctest::Approx(0.5));
  CHECK(g.in_adjacency(1, 2) == doctest::Approx(0.5));
}

TEST_CASE("session graph: branching splits outgoing weight") {
  auto g = build_session_graph(std::vector<vocab_id>{1, 2, 3, 2, 4});
  const int node2 = 1;
  CHECK(g.out_adjacency(node2, 2) == doctest::Approx(0.5));
  CHECK(g.out_adjacency(node2, 3) == doctest::Approx(0.5));
}

TEST_CASE("session graph: single node has empty adjacency") {
  auto g = build_session_graph(std::vector<vocab_id>{7});
  CHECK(g.size() == 1);
  CHECK(g.out_adjacency.isZero(0.0));
  CHECK(g.in_adjacency.isZero(0.0));
  CHECK(g.last_node == 0);
}

TEST_CASE("session graph: repeated value forms a self loop") {
  auto g = build_session_graph(std::vector<vocab_id>{9, 9, 9});
  REQUIRE(g.size() == 1);
  CHECK(g.out_adjacency(0, 0) == 1.0);
  CHECK(g.in_adjacency(0, 0) == 1.0);
}

TEST_CASE("session graph: row sums are exactly 0 or 1") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<vocab_id> prefix;
    const std::size_t len = 1 + rng() % 8;
    for (std::size_t i = 0; i < len; ++i) prefix.push_back(static_cast<vocab_id>(1 + rng() % 5));
    auto g = build_session_graph(prefix);
    for (index_t u = 0; u < g.size(); ++u) {
      const scalar_t out_sum = g.out_adjacency.row(u).sum();
      const scalar_t in_sum = g.in_adjacency.row(u).sum();
      CHECK((std::abs(out_sum) < 1e-12 || std::abs(out_sum - 1.0) < 1e-12));
      CHECK((std::abs(in_sum) < 1e-12 || std::abs(in_sum - 1.0) < 1e-12));
    }
  }
}

TEST_CASE("session graph depends only on the edge multiset") {
  // [1,2,1,3] and [1,3,1,2] share nodes but not edges; [1,2,1,2] vs the
  // occurrence-permuted [1,2,1,2] reversal of duplicated transitions: use
  // two orders inducing the same multiset of edges.
  auto a = build_session_graph(std::vector<vocab_id>{1, 2, 1, 2, 1});
  auto b = build_session_graph(std::vector<vocab_id>{1, 2, 1, 2, 1});
  CHECK(a.out_adjacency == b.out_adjacency);
  // edges of [2,1,2,1,2]: {2->1 x2, 1->2 x2}; same multiset as [1,2,1,2,1]
  // modulo node order, and node order is first-appearance, so compare by id
  auto c = build_session_graph(std::vector<vocab_id>{2, 1, 2, 1, 2});
  auto weight = [](const SessionGraph& g, vocab_id from, vocab_id to) {
    const auto fi = std::find(g.nodes.begin(), g.nodes.end(), from) - g.nodes.begin();
    const auto ti = std::find(g.nodes.begin(), g.nodes.end(), to) - g.nodes.begin();
    return g.out_adjacency(fi, ti);
  };
  CHECK(weight(a, 1, 2) == weight(c, 1, 2));
  CHECK(weight(a, 2, 1) == weight(c, 2, 1));
}

TEST_CASE("session graph rejects empty and padded prefixes") {
  CHECK_THROWS_AS((void)build_session_graph(std::vector<vocab_id>{}), std::invalid_argument);
  CHECK_THROWS_AS((void)build_session_graph(std::vector<vocab_id>{1, 0}), std::invalid_argument);
}

TEST_CASE("propagate: zero weights halve the node vectors") {
  std::mt19937_64 rng(42);
  PropagationParams p = random_prop(rng, 2);
  for (auto* m : {&p.transform, &p.bias, &p.update_a, &p.update_v, &p.reset_a, &p.reset_v,
                  &p.cand_a, &p.cand_v})
    m->value.setZero();
  auto g = build_session_graph(std::vector<vocab_id>{1, 2});
  matrix_t v0 = testutil::random_matrix(rng, 2, 2);
  matrix_t v1 = propagate(g, v0, p, 1);
  CHECK((v1 - 0.5 * v0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("propagate: isolated node sees only the bias") {
  std::mt19937_64 rng(43);
  PropagationParams p = random_prop(rng, 2);
  auto g = build_session_graph(std::vector<vocab_id>{5});
  matrix_t v0 = testutil::random_matrix(rng, 1, 2);
  matrix_t ours = propagate(g, v0, p, 1);
  // hand recurrence at d=2: a = b, then the gated update
  const vector_t a = p.bias.value.col(0);
  vector_t z(2), r(2);
  for (int i = 0; i < 2; ++i) {
    z(i) = 1.0 / (1.0 + std::exp(-(p.update_a.value.row(i).dot(a.transpose()) +
                                   p.update_v.value.row(i).dot(v0.row(0)))));
    r(i) = 1.0 / (1.0 + std::exp(-(p.reset_a.value.row(i).dot(a.transpose()) +
                                   p.reset_v.value.row(i).dot(v0.row(0)))));
  }
  for (int i = 0; i < 2; ++i) {
    scalar_t acc = 0;
    for (int k = 0; k < 2; ++k)
      acc += p.cand_a.value(i, k) * a(k) + p.cand_v.value(i, k) * (r(k) * v0(0, k));
    const scalar_t expect = (1 - z(i)) * v0(0, i) + z(i) * std::tanh(acc);
    CHECK(ours(0, i) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("propagate matches the naive loop oracle") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    PropagationParams p = random_prop(rng, 2);
    std::vector<vocab_id> prefix;
    const std::size_t len = 1 + rng() % 6;
    for (std::size_t i = 0; i < len; ++i) prefix.push_back(static_cast<vocab_id>(1 + rng() % 4));
    auto g = build_session_graph(prefix);
    matrix_t v0 = testutil::random_matrix(rng, g.size(), 2);
    matrix_t ours = propagate(g, v0, p, 2);
    matrix_t naive = v0;
    for (int s = 0; s < 2; ++s)
      naive = oracle::propagate_once(g.out_adjacency, g.in_adjacency, naive, p.transform.value,
                                     p.bias.value.col(0), p.update_a.value, p.update_v.value,
                                     p.reset_a.value, p.reset_v.value, p.cand_a.value,
                                     p.cand_v.value);
    CHECK((ours - naive).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("session_readout: zero query pools nothing") {
  std::mt19937_64 rng(45);
  ReadoutParams p = random_readout(rng, 2);
  p.q.value.setZero();
  auto g = build_session_graph(std::vector<vocab_id>{1, 2});
  matrix_t nodes = testutil::random_matrix(rng, 2, 2);
  vector_t s_h = session_readout(nodes, g, p);
  vector_t joint(4);
  joint << nodes.row(g.last_node).transpose(), vector_t::Zero(2);
  CHECK((s_h - p.merge.value * joint).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("session_readout: single node pools itself") {
  std::mt19937_64 rng(46);
  ReadoutParams p = random_readout(rng, 2);
  auto g = build_session_graph(std::vector<vocab_id>{3});
  matrix_t nodes = testutil::random_matrix(rng, 1, 2);
  vector_t ours = session_readout(nodes, g, p);
  vector_t naive = oracle::session_readout(nodes, 0, p.q.value.col(0), p.w_last.value,
                                           p.w_each.value, p.bias.value.col(0), p.merge.value);
  CHECK((ours - naive).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("session_readout matches the naive loop oracle") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    ReadoutParams p = random_readout(rng, 3);
    std::vector<vocab_id> prefix;
    const std::size_t len = 1 + rng() % 6;
    for (std::size_t i = 0; i < len; ++i) prefix.push_back(static_cast<vocab_id>(1 + rng() % 5));
    auto g = build_session_graph(prefix);
    matrix_t nodes = testutil::random_matrix(rng, g.size(), 3);
    vector_t ours = session_readout(nodes, g, p);
    vector_t naive = oracle::session_readout(nodes, g.last_node, p.q.value.col(0), p.w_last.value,
                                             p.w_each.value, p.bias.value.col(0), p.merge.value);
    CHECK((ours - naive).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("score_and_normalize fixtures") {
  std::mt19937_64 rng(48);
  SUBCASE("zero session vector gives the uniform distribution") {
    matrix_t cand = testutil::random_matrix(rng, 5, 3);
    vector_t y = score_and_normalize(vector_t::Zero(3), cand);
    CHECK(y(0) == 0.0);
    for (int i = 1; i < 5; ++i) CHECK(y(i) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("scaling an aligned candidate raises its probability") {
    matrix_t cand = testutil::random_matrix(rng, 4, 2);
    vector_t s = testutil::random_vector(rng, 2);
    cand.row(2) = s.transpose();  // positive alignment
    vector_t before = score_and_normalize(s, cand);
    cand.row(2) *= 2.0;
    vector_t after = score_and_normalize(s, cand);
    CHECK(after(2) > before(2));
  }
  SUBCASE("matches a brute-force softmax at vocab 6") {
    matrix_t cand = testutil::random_matrix(rng, 6, 3);
    vector_t s = testutil::random_vector(rng, 3);
    vector_t ours = score_and_normalize(s, cand);
    std::vector<scalar_t> scores;
    for (index_t i = 0; i < 6; ++i) scores.push_back(cand.row(i).dot(s.transpose()));
    mask_t mask(6, 1);
    mask[0] = 0;
    auto naive = oracle::masked_softmax(scores, mask);
    for (index_t i = 0; i < 6; ++i) CHECK(std::abs(ours(i) - naive[static_cast<std::size_t>(i)]) < 1e-12);
    CHECK(ours.sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("cross entropy uses both terms as written") {
  SUBCASE("two candidates at 0.5 give 2 ln 2") {
    vector_t y(3);
    y << 0.0, 0.5, 0.5;
    CHECK(cross_entropy_loss(y, 1) == doctest::Approx(1.3862943611).epsilon(1e-9));
  }
  SUBCASE("concentrated prediction is nearly free") {
    vector_t y(3);
    y << 0.0, 1.0 - 1e-12, 1e-12;
    CHECK(cross_entropy_loss(y, 1) < 1e-9);
  }
  SUBCASE("pad target violates the contract") {
    vector_t y(3);
    y << 0.0, 0.5, 0.5;
    CHECK_THROWS_AS((void)cross_entropy_loss(y, 0), std::invalid_argument);
  }
}

TEST_CASE("multi-valued side information is rejected with a clear error") {
  ModelConfig cfg = small_config(true);
  std::vector<SideValue> multi_map(static_cast<std::size_t>(cfg.item_vocab));
  for (std::size_t i = 1; i < multi_map.size(); ++i) multi_map[i] = {1, 2};
  CHECK_THROWS_WITH_AS(Srgnn(cfg, multi_map), doctest::Contains("one category"), ConfigError);
}

TEST_CASE("prediction invariants over random draws") {
  std::mt19937_64 rng(49);
  for (int trial = 0; trial < 100; ++trial) {
    const bool use_side = trial % 2 == 0;
    ModelConfig cfg = small_config(use_side, 2000 + trial);
    auto map = single_side_map(rng, cfg.item_vocab, use_side ? cfg.side_vocab : 2);
    Srgnn model(cfg, use_side ? map : std::vector<SideValue>{});
    data::Session s = use_side ? with_sides({1, 5, 1, 3}, map) : sess({1, 5, 1, 3});
    auto examples = data::expand_prefixes(s, 6);
    vector_t y = model.predict(examples[rng() % examples.size()]);
    CHECK(y.sum() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(y.minCoeff() >= 0.0);
    CHECK(y(0) == 0.0);
  }
}

TEST_CASE("repeated side value self-loop flows through prediction") {
  ModelConfig cfg = small_config(true, 77);
  std::vector<SideValue> map(static_cast<std::size_t>(cfg.item_vocab));
  for (std::size_t i = 1; i < map.size(); ++i) map[i] = {1};  // one shared category
  Srgnn model(cfg, map);
  data::Session s = with_sides({1, 2, 1}, map);
  auto y = model.score_prefixes(s);
  REQUIRE(y.size() == 2);
  CHECK(y[1].sum() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 rng(50);
  for (const bool use_side : {false, true}) {
    for (const scalar_t lambda : {0.0, 0.5}) {
      CAPTURE(use_side);
      CAPTURE(lambda);
      ModelConfig cfg = small_config(use_side, 123);
      auto map = single_side_map(rng, cfg.item_vocab, use_side ? cfg.side_vocab : 2);
      Srgnn model(cfg, use_side ? map : std::vector<SideValue>{});
      std::vector<data::Session> batch;
      if (use_side) {
        batch.push_back(with_sides({1, 2, 1, 3}, map));
        batch.push_back(with_sides({4, 2}, map));
      } else {
        batch.push_back(sess({1, 2, 1, 3}));
        batch.push_back(sess({4, 2}));
      }
      std::vector<ag::Parameter*> params;
      model.visit_params([&](ag::Parameter& p) { params.push_back(&p); });
      model.zero_grads();
      model.batch_loss_grad(batch, lambda);
      auto loss = [&]() { return model.batch_loss(batch, lambda).total; };
      CHECK(testutil::max_grad_error(loss, params) < 1e-6);
    }
  }
}

TEST_CASE("attention weight zero leaves the loss independent of targets") {
  ModelConfig cfg = small_config(false, 91);
  Srgnn model(cfg, {});
  std::vector<data::Session> batch{sess({1, 2, 3})};
  auto a = model.batch_loss(batch, 0.0);
  CHECK(a.total == doctest::Approx(a.prediction).epsilon(1e-12));
  auto b = model.batch_loss(batch, 1.0);
  CHECK(b.total == doctest::Approx(b.prediction + b.attention).epsilon(1e-9));
}

TEST_CASE("two propagation steps stay consistent through training entry points") {
  std::mt19937_64 rng(52);
  ModelConfig cfg = small_config(false, 7);
  cfg.propagation_steps = 2;
  Srgnn model(cfg, {});
  std::vector<data::Session> batch{sess({1, 2, 1})};
  std::vector<ag::Parameter*> params;
  model.visit_params([&](ag::Parameter& p) { params.push_back(&p); });
  model.zero_grads();
  model.batch_loss_grad(batch, 0.0);
  auto loss = [&]() { return model.batch_loss(batch, 0.0).total; };
  CHECK(testutil::max_grad_error(loss, params) < 1e-6);
}
