#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sessrec/errors.hpp"
#include "sessrec/types.hpp"

namespace sessrec::ag {

/**
 * A named learnable tensor. `grad` always has the same shape as `value`
 * and is accumulated into by Tape::backward.
 */
struct Parameter {
  std::string name;
  matrix_t value;
  matrix_t grad;

  Parameter() = default;
  Parameter(std::string n, matrix_t v)
      : name(std::move(n)), value(std::move(v)), grad(matrix_t::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

class Tape;

/** Handle to a node on a Tape. Cheap to copy; invalid when default-constructed. */
class Var {
 public:
  Var() = default;

  const matrix_t& value() const;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  index_t rows() const { return value().rows(); }
  index_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/**
 * Reverse-mode tape over dense Eigen values. One tape is built per loss
 * evaluation; backward() walks the nodes in reverse creation order and
 * scatters leaf gradients into the referenced Parameters.
 */
class Tape {
 public:
  using BackFn = std::function<void(Tape&, const matrix_t& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /** Non-differentiable input. */
  Var constant(matrix_t v);

  /** Leaf bound to a Parameter; backward adds into p.grad. */
  Var param(Parameter& p);

  /** Internal: create a node. `fn` receives the upstream gradient. */
  Var make(matrix_t value, bool needs_grad, BackFn fn);

  /** Internal: attach the backward closure after node creation. */
  void set_back(Var v, BackFn fn);

  /** Run reverse accumulation from a 1x1 root. */
  void backward(Var root);

  const matrix_t& value(Var v) const { return nodes_[v.id_].value; }
  const matrix_t& val(int id) const { return nodes_[id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id_].needs_grad; }

  /** Gradient of the last backward() w.r.t. `v`; zero matrix if unreached. */
  matrix_t grad(Var v) const;

  /** Accumulate `g` into the stored gradient of node `id`. */
  void accumulate(int id, const matrix_t& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    matrix_t value;
    matrix_t grad;  // empty until reached during backward
    bool needs_grad = false;
    BackFn back;
  };

  std::vector<Node> nodes_;
};

inline const matrix_t& Var::value() const { return tape_->value(*this); }

/** Value of a 1x1 node. */
scalar_t scalar(Var v);

// ---- elementwise ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var cmul(Var a, Var b);
Var one_minus(Var a);
Var scale(Var a, scalar_t c);
/** s is 1x1; out = s * a. */
Var smul(Var s, Var a);
Var sigmoid(Var a);
Var tanh_(Var a);
Var log_(Var a);
Var clamp(Var a, scalar_t lo, scalar_t hi);

// ---- linear algebra ----
Var matmul(Var a, Var b);
/** a^T * b without materializing the transpose. */
Var matmul_tn(Var a, Var b);
Var transpose(Var a);
Var dot(Var a, Var b);

// ---- structure ----
/** Stack rows: [a; b]. */
Var vcat(Var a, Var b);
/** Concatenate columns: [a, b]. */
Var hcat(Var a, Var b);
Var hstack(std::span<const Var> cols);
Var first_cols(Var a, index_t k);
Var gather_cols(Var a, std::span<const int> idx);
/** m + col * ones(1, m.cols()). */
Var bcast_add_col(Var col, Var m);
/** Row `row` of a table, as a column vector. */
Var row_lookup(Var table, vocab_id row);
/** Mean of the given table rows, as a column vector. Rows must be non-empty. */
Var mean_rows(Var table, std::span<const vocab_id> rows);
/** out[ids[t]] += s[t] over a zero vector of length `size`. */
Var scatter_rows(Var s, std::span<const vocab_id> ids, index_t size);
Var pick(Var v, index_t i);
/** Sum of same-shaped nodes. */
Var sum(std::span<const Var> terms);

/**
 * Softmax over the unmasked entries of a column vector; masked entries are
 * exactly zero in the output and receive zero gradient.
 */
Var masked_softmax(Var logits, const mask_t& mask);

}  // namespace sessrec::ag
