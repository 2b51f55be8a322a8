#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "fd_util.hpp"
#include "sessrec/nn/embedding.hpp"
#include "sessrec/nn/fusion.hpp"

using namespace sessrec;
using namespace sessrec::nn;

TEST_CASE("single-value embedding lookups") {
  std::mt19937_64 rng(3);
  EmbeddingTable t = make_embedding("t", 5, 3, rng);
  SUBCASE("pad row is the zero vector") { CHECK(embed(t, 0).isZero(0.0)); }
  SUBCASE("row k returns table row k") {
    CHECK(embed(t, 2) == vector_t(t.table.value.row(2).transpose()));
  }
  SUBCASE("same id, same vector") { CHECK(embed(t, 3) == embed(t, 3)); }
  SUBCASE("out of range throws") { CHECK_THROWS_AS((void)embed(t, 9), std::out_of_range); }
}

TEST_CASE("set embedding is the member mean") {
  std::mt19937_64 rng(5);
  EmbeddingTable t = make_embedding("t", 6, 2, rng);
  t.table.value.row(1) << 1.0, 0.0;
  t.table.value.row(2) << 0.0, 1.0;
  SUBCASE("two-point mean") {
    vector_t m = embed(t, SideValue{1, 2});
    CHECK(m(0) == doctest::Approx(0.5));
    CHECK(m(1) == doctest::Approx(0.5));
  }
  SUBCASE("singleton reduces to the plain lookup") {
    CHECK(embed(t, SideValue{4}) == embed(t, vocab_id(4)));
  }
  SUBCASE("matches an elementwise brute-force average") {
    const SideValue ids{1, 3, 5};
    vector_t brute = vector_t::Zero(2);
    for (vocab_id id : ids)
      for (index_t k = 0; k < 2; ++k) brute(k) += t.table.value(id, k) / 3.0;
    CHECK((embed(t, ids) - brute).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("member order does not matter") {
    SideValue a{1, 2, 5};
    SideValue b{5, 1, 2};
    std::sort(b.begin(), b.end());  // sets are stored sorted
    CHECK(embed(t, a) == embed(t, b));
  }
  SUBCASE("empty set violates the contract") {
    CHECK_THROWS_AS((void)embed(t, SideValue{}), std::invalid_argument);
  }
}

TEST_CASE("fuse concatenates item half first") {
  std::vector<vector_t> item{(vector_t(2) << 1, 2).finished()};
  std::vector<vector_t> side{(vector_t(2) << 3, 4).finished()};
  auto fused = fuse(item, side, mask_t{1});
  REQUIRE(fused.h.size() == 1);
  CHECK(fused.h[0] == (vector_t(4) << 1, 2, 3, 4).finished());
}

TEST_CASE("fuse pass-through and masking") {
  std::vector<vector_t> item{(vector_t(2) << 1, 2).finished(), (vector_t(2) << 5, 6).finished()};
  SUBCASE("baseline mode keeps the item hidden unchanged") {
    auto fused = fuse(item, mask_t{1, 1});
    CHECK(fused.h[0] == item[0]);
    CHECK(fused.dim() == 2);
  }
  SUBCASE("masked steps carry exact zeros") {
    std::vector<vector_t> side = item;
    auto fused = fuse(item, side, mask_t{1, 0});
    CHECK(fused.h[1].isZero(0.0));
    CHECK(fused.h[1].size() == 4);
  }
  SUBCASE("length mismatch is a shape error") {
    std::vector<vector_t> side{item[0]};
    CHECK_THROWS_AS((void)fuse(item, side, mask_t{1, 1}), ShapeError);
  }
}

TEST_CASE("fuse is position-stable under permutation") {
  std::mt19937_64 rng(11);
  std::vector<vector_t> item, side;
  for (int i = 0; i < 5; ++i) {
    item.push_back(testutil::random_vector(rng, 3));
    side.push_back(testutil::random_vector(rng, 3));
  }
  mask_t mask{1, 1, 0, 1, 1};
  auto fused = fuse(item, side, mask);
  std::vector<std::size_t> perm{4, 2, 0, 1, 3};
  std::vector<vector_t> pitem, pside;
  mask_t pmask;
  for (std::size_t p : perm) {
    pitem.push_back(item[p]);
    pside.push_back(side[p]);
    pmask.push_back(mask[p]);
  }
  auto pfused = fuse(pitem, pside, pmask);
  for (std::size_t i = 0; i < perm.size(); ++i) CHECK(pfused.h[i] == fused.h[perm[i]]);
}

TEST_CASE("side_mix_matrix averages the mapped rows") {
  std::mt19937_64 rng(13);
  EmbeddingTable items = make_embedding("items", 4, 3, rng);
  EmbeddingTable sides = make_embedding("sides", 5, 2, rng);
  std::vector<SideValue> map{{}, {1}, {2, 4}, {}};

  matrix_t mix = side_mix_matrix(map, 5);
  CHECK(mix.row(0).isZero(0.0));
  CHECK(mix(1, 1) == 1.0);
  CHECK(mix(2, 2) == doctest::Approx(0.5));
  CHECK(mix(2, 4) == doctest::Approx(0.5));
  CHECK(mix.row(3).isZero(0.0));

  matrix_t cand = fused_candidates(items, &sides, map);
  CHECK(cand.rows() == 4);
  CHECK(cand.cols() == 5);
  CHECK(cand.row(0).isZero(0.0));
  // item half then side half
  CHECK(cand(1, 0) == items.table.value(1, 0));
  const vector_t side_mean = embed(sides, SideValue{2, 4});
  CHECK(cand(2, 3) == doctest::Approx(side_mean(0)));
  CHECK(cand(2, 4) == doctest::Approx(side_mean(1)));

  matrix_t plain = fused_candidates(items, nullptr, map);
  CHECK(plain == items.table.value);
}
