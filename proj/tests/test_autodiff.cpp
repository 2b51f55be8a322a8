#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fd_util.hpp"
#include "sessrec/ag/tape.hpp"

using namespace sessrec;
using namespace sessrec::ag;
using testutil::max_grad_error;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

// Builds the loss from fresh leaves each call so finite differences see
// parameter edits.
scalar_t run_and_fill_grads(const std::function<Var(Tape&)>& build,
                            std::vector<Parameter*> params) {
  for (Parameter* p : params) p->zero_grad();
  Tape tape;
  Var loss = build(tape);
  tape.backward(loss);
  return scalar(loss);
}

scalar_t check_op(const std::function<Var(Tape&)>& build, std::vector<Parameter*> params) {
  run_and_fill_grads(build, params);
  auto loss = [&]() {
    Tape tape;
    return scalar(build(tape));
  };
  return max_grad_error(loss, params);
}

}  // namespace

TEST_CASE("elementwise ops match finite differences") {
  std::mt19937_64 rng(7);
  Parameter a("a", random_matrix(rng, 3, 2));
  Parameter b("b", random_matrix(rng, 3, 2));
  const matrix_t probe = random_matrix(rng, 3, 2);

  auto scalarize = [&](Tape& t, Var x) { return dot(x, t.constant(probe)); };

  CHECK(check_op([&](Tape& t) { return scalarize(t, add(t.param(a), t.param(b))); }, {&a, &b}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return scalarize(t, sub(t.param(a), t.param(b))); }, {&a, &b}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return scalarize(t, cmul(t.param(a), t.param(b))); }, {&a, &b}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return scalarize(t, one_minus(t.param(a))); }, {&a}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return scalarize(t, scale(t.param(a), -1.7)); }, {&a}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return scalarize(t, sigmoid(t.param(a))); }, {&a}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return scalarize(t, tanh_(t.param(a))); }, {&a}) < 1e-6);
}

TEST_CASE("smul, pick, log, clamp") {
  std::mt19937_64 rng(11);
  Parameter s("s", random_matrix(rng, 1, 1));
  Parameter v("v", random_matrix(rng, 4, 1, 0.5, 2.0));
  const matrix_t probe = random_matrix(rng, 4, 1);

  CHECK(check_op([&](Tape& t) { return dot(smul(t.param(s), t.param(v)), t.constant(probe)); },
                 {&s, &v}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return log_(pick(t.param(v), 2)); }, {&v}) < 1e-6);
  // Clamp active on both sides; gradient must vanish there.
  Parameter w("w", (vector_t(3) << 0.2, -5.0, 9.0).finished());
  run_and_fill_grads(
      [&](Tape& t) { return dot(clamp(t.param(w), 0.0, 1.0), t.constant(vector_t::Ones(3))); }, {&w});
  CHECK(w.grad(0, 0) == doctest::Approx(1.0));
  CHECK(w.grad(1, 0) == 0.0);
  CHECK(w.grad(2, 0) == 0.0);
}

TEST_CASE("matrix products and transpose") {
  std::mt19937_64 rng(13);
  Parameter a("a", random_matrix(rng, 3, 4));
  Parameter b("b", random_matrix(rng, 4, 2));
  Parameter c("c", random_matrix(rng, 3, 2));
  const matrix_t probe32 = random_matrix(rng, 3, 2);
  const matrix_t probe42 = random_matrix(rng, 4, 2);

  CHECK(check_op([&](Tape& t) { return dot(matmul(t.param(a), t.param(b)), t.constant(probe32)); },
                 {&a, &b}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return dot(matmul_tn(t.param(a), t.param(c)), t.constant(probe42)); },
                 {&a, &c}) < 1e-6);
  const matrix_t probe43 = random_matrix(rng, 4, 3);
  CHECK(check_op([&](Tape& t) { return dot(transpose(t.param(a)), t.constant(probe43)); }, {&a}) <
        1e-6);
  CHECK(check_op([&](Tape& t) { return dot(t.param(c), t.param(c)); }, {&c}) < 1e-6);
}

TEST_CASE("concatenation and slicing") {
  std::mt19937_64 rng(17);
  Parameter a("a", random_matrix(rng, 2, 3));
  Parameter b("b", random_matrix(rng, 2, 2));
  Parameter c("c", random_matrix(rng, 3, 3));
  const matrix_t p25 = random_matrix(rng, 2, 5);
  const matrix_t p53 = random_matrix(rng, 5, 3);
  const matrix_t p22 = random_matrix(rng, 2, 2);
  const matrix_t p24 = random_matrix(rng, 2, 4);

  CHECK(check_op([&](Tape& t) { return dot(hcat(t.param(a), t.param(b)), t.constant(p25)); },
                 {&a, &b}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return dot(vcat(t.param(a), t.param(c)), t.constant(p53)); },
                 {&a, &c}) < 1e-6);
  CHECK(check_op([&](Tape& t) { return dot(first_cols(t.param(a), 2), t.constant(p22)); }, {&a}) <
        1e-6);
  const std::vector<int> idx{2, 0, 2, 1};
  CHECK(check_op([&](Tape& t) { return dot(gather_cols(t.param(a), idx), t.constant(p24)); }, {&a}) <
        1e-6);

  Parameter col("col", random_matrix(rng, 2, 1));
  CHECK(check_op([&](Tape& t) { return dot(bcast_add_col(t.param(col), t.param(a)), t.constant(p25.leftCols(3))); },
                 {&col, &a}) < 1e-6);

  // hstack of column vectors
  Parameter v1("v1", random_matrix(rng, 3, 1));
  Parameter v2("v2", random_matrix(rng, 3, 1));
  const matrix_t p32 = random_matrix(rng, 3, 2);
  CHECK(check_op(
            [&](Tape& t) {
              std::vector<Var> cols{t.param(v1), t.param(v2)};
              return dot(hstack(cols), t.constant(p32));
            },
            {&v1, &v2}) < 1e-6);
}

TEST_CASE("table lookups and scatter") {
  std::mt19937_64 rng(19);
  Parameter table("table", random_matrix(rng, 5, 3));
  const matrix_t p31 = random_matrix(rng, 3, 1);

  CHECK(check_op([&](Tape& t) { return dot(row_lookup(t.param(table), 3), t.constant(p31)); },
                 {&table}) < 1e-6);
  const std::vector<int> set{1, 4, 2};
  CHECK(check_op([&](Tape& t) { return dot(mean_rows(t.param(table), set), t.constant(p31)); },
                 {&table}) < 1e-6);

  Parameter s("s", random_matrix(rng, 4, 1));
  const std::vector<int> ids{2, 0, 2, 5};
  const matrix_t p61 = random_matrix(rng, 6, 1);
  CHECK(check_op([&](Tape& t) { return dot(scatter_rows(t.param(s), ids, 6), t.constant(p61)); },
                 {&s}) < 1e-6);

  // scatter accumulates duplicates
  Tape t;
  Var out = scatter_rows(t.constant(vector_t((vector_t(4) << 0.5, 1.0, 0.25, 2.0).finished())), ids, 6);
  CHECK(out.value()(2, 0) == doctest::Approx(0.75));
  CHECK(out.value()(0, 0) == doctest::Approx(1.0));
  CHECK(out.value()(5, 0) == doctest::Approx(2.0));
  CHECK(out.value()(1, 0) == 0.0);
}

TEST_CASE("masked softmax: values and gradient") {
  std::mt19937_64 rng(23);
  Parameter logits("logits", random_matrix(rng, 5, 1, -2.0, 2.0));
  const mask_t mask{1, 0, 1, 1, 0};
  const matrix_t probe = random_matrix(rng, 5, 1);

  Tape t;
  Var y = masked_softmax(t.param(logits), mask);
  scalar_t total = 0;
  for (index_t i = 0; i < 5; ++i) total += y.value()(i, 0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(y.value()(1, 0) == 0.0);
  CHECK(y.value()(4, 0) == 0.0);

  CHECK(check_op([&](Tape& tp) { return dot(masked_softmax(tp.param(logits), mask), tp.constant(probe)); },
                 {&logits}) < 1e-6);

  mask_t none{0, 0, 0, 0, 0};
  Tape t2;
  CHECK_THROWS_AS((void)masked_softmax(t2.param(logits), none), std::invalid_argument);
}

TEST_CASE("sum over many terms") {
  std::mt19937_64 rng(29);
  Parameter a("a", random_matrix(rng, 1, 1));
  Parameter b("b", random_matrix(rng, 1, 1));
  CHECK(check_op(
            [&](Tape& t) {
              std::vector<Var> terms;
              for (int k = 0; k < 4; ++k) terms.push_back(smul(t.param(a), t.param(b)));
              return sum(terms);
            },
            {&a, &b}) < 1e-6);
}

TEST_CASE("constants receive no gradient and propagate needs_grad") {
  Tape t;
  Var c = t.constant(matrix_t::Ones(2, 2));
  Var d = sigmoid(c);
  CHECK_FALSE(t.needs_grad(d));
  Parameter p("p", matrix_t::Ones(2, 2));
  Var e = add(d, t.param(p));
  CHECK(t.needs_grad(e));
  Var loss = dot(e, t.constant(matrix_t::Ones(2, 2)));
  t.backward(loss);
  CHECK(p.grad(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("shape errors are reported") {
  Tape t;
  Var a = t.constant(matrix_t::Ones(2, 2));
  Var b = t.constant(matrix_t::Ones(3, 2));
  CHECK_THROWS_AS((void)add(a, b), ShapeError);
  CHECK_THROWS_AS((void)matmul(a, b), ShapeError);
  CHECK_THROWS_AS((void)t.backward(a), ShapeError);
}
