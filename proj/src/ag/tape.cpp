#include "sessrec/ag/tape.hpp"

#include <cmath>
#include <utility>

namespace sessrec::ag {

namespace {

void check_same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw ShapeError("ag: operands belong to different tapes");
}

void check_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string("ag: shape mismatch in ") + op);
}

}  // namespace

Var Tape::constant(matrix_t v) {
  nodes_.push_back(Node{std::move(v), {}, false, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  Parameter* ptr = &p;
  nodes_.push_back(Node{p.value, {}, true,
                        [ptr](Tape&, const matrix_t& g) { ptr->grad += g; }});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::make(matrix_t value, bool needs_grad, BackFn fn) {
  nodes_.push_back(Node{std::move(value), {}, needs_grad, needs_grad ? std::move(fn) : nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::set_back(Var v, BackFn fn) { nodes_[v.id()].back = std::move(fn); }

void Tape::accumulate(int id, const matrix_t& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

matrix_t Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) return matrix_t::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw ShapeError("ag: backward on foreign tape");
  if (root.value().size() != 1) throw ShapeError("ag: backward root must be scalar");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  nodes_[root.id()].grad = matrix_t::Ones(1, 1);
  for (int i = root.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.back) continue;
    n.back(*this, n.grad);
  }
}

scalar_t scalar(Var v) {
  if (v.value().size() != 1) throw ShapeError("ag: scalar() on non-scalar node");
  return v.value()(0, 0);
}

// ---- elementwise ----

Var add(Var a, Var b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "add");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.make(a.value() + b.value(), t.needs_grad(a) || t.needs_grad(b),
                [ia, ib](Tape& tp, const matrix_t& g) {
                  tp.accumulate(ia, g);
                  tp.accumulate(ib, g);
                });
}

Var sub(Var a, Var b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.make(a.value() - b.value(), t.needs_grad(a) || t.needs_grad(b),
                [ia, ib](Tape& tp, const matrix_t& g) {
                  tp.accumulate(ia, g);
                  tp.accumulate(ib, -g);
                });
}

Var cmul(Var a, Var b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "cmul");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.make(a.value().cwiseProduct(b.value()), t.needs_grad(a) || t.needs_grad(b),
                [ia, ib](Tape& tp, const matrix_t& g) {
                  tp.accumulate(ia, g.cwiseProduct(tp.val(ib)));
                  tp.accumulate(ib, g.cwiseProduct(tp.val(ia)));
                });
}

Var one_minus(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.make(matrix_t::Ones(a.rows(), a.cols()) - a.value(), t.needs_grad(a),
                [ia](Tape& tp, const matrix_t& g) { tp.accumulate(ia, -g); });
}

Var scale(Var a, scalar_t c) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.make(a.value() * c, t.needs_grad(a),
                [ia, c](Tape& tp, const matrix_t& g) { tp.accumulate(ia, g * c); });
}

Var smul(Var s, Var a) {
  check_same_tape(s, a);
  if (s.value().size() != 1) throw ShapeError("ag: smul scale must be 1x1");
  Tape& t = *a.tape();
  const int is = s.id(), ia = a.id();
  return t.make(a.value() * s.value()(0, 0), t.needs_grad(s) || t.needs_grad(a),
                [is, ia](Tape& tp, const matrix_t& g) {
                  tp.accumulate(ia, g * tp.val(is)(0, 0));
                  matrix_t gs(1, 1);
                  gs(0, 0) = g.cwiseProduct(tp.val(ia)).sum();
                  tp.accumulate(is, gs);
                });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  matrix_t y = a.value().unaryExpr([](scalar_t x) { return scalar_t(1) / (scalar_t(1) + std::exp(-x)); });
  const int ia = a.id();
  Var out = t.make(std::move(y), t.needs_grad(a), nullptr);
  if (t.needs_grad(a)) {
    const int io = out.id();
    t.set_back(out, [ia, io](Tape& tp, const matrix_t& g) {
      const matrix_t& yv = tp.val(io);
      tp.accumulate(ia, g.cwiseProduct(yv.cwiseProduct(matrix_t::Ones(yv.rows(), yv.cols()) - yv)));
    });
  }
  return out;
}

Var tanh_(Var a) {
  Tape& t = *a.tape();
  matrix_t y = a.value().array().tanh().matrix();
  const int ia = a.id();
  Var out = t.make(std::move(y), t.needs_grad(a), nullptr);
  if (t.needs_grad(a)) {
    const int io = out.id();
    t.set_back(out, [ia, io](Tape& tp, const matrix_t& g) {
      const matrix_t& yv = tp.val(io);
      tp.accumulate(ia, g.cwiseProduct((matrix_t::Ones(yv.rows(), yv.cols()) - yv.cwiseProduct(yv))));
    });
  }
  return out;
}

Var log_(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.make(a.value().array().log().matrix(), t.needs_grad(a),
                [ia](Tape& tp, const matrix_t& g) {
                  tp.accumulate(ia, g.cwiseQuotient(tp.val(ia)));
                });
}

Var clamp(Var a, scalar_t lo, scalar_t hi) {
  Tape& t = *a.tape();
  const int ia = a.id();
  matrix_t y = a.value().cwiseMax(lo).cwiseMin(hi);
  return t.make(std::move(y), t.needs_grad(a),
                [ia, lo, hi](Tape& tp, const matrix_t& g) {
                  const matrix_t& x = tp.val(ia);
                  matrix_t gx = g;
                  for (index_t j = 0; j < x.cols(); ++j)
                    for (index_t i = 0; i < x.rows(); ++i)
                      if (x(i, j) < lo || x(i, j) > hi) gx(i, j) = 0;
                  tp.accumulate(ia, gx);
                });
}

// ---- linear algebra ----

Var matmul(Var a, Var b) {
  check_same_tape(a, b);
  if (a.cols() != b.rows()) throw ShapeError("ag: matmul inner dimension mismatch");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  const bool ga = t.needs_grad(a), gb = t.needs_grad(b);
  return t.make(a.value() * b.value(), ga || gb,
                [ia, ib, ga, gb](Tape& tp, const matrix_t& g) {
                  if (ga) tp.accumulate(ia, g * tp.val(ib).transpose());
                  if (gb) tp.accumulate(ib, tp.val(ia).transpose() * g);
                });
}

Var matmul_tn(Var a, Var b) {
  check_same_tape(a, b);
  if (a.rows() != b.rows()) throw ShapeError("ag: matmul_tn dimension mismatch");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  const bool ga = t.needs_grad(a), gb = t.needs_grad(b);
  return t.make(a.value().transpose() * b.value(), ga || gb,
                [ia, ib, ga, gb](Tape& tp, const matrix_t& g) {
                  if (ga) tp.accumulate(ia, tp.val(ib) * g.transpose());
                  if (gb) tp.accumulate(ib, tp.val(ia) * g);
                });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.make(a.value().transpose(), t.needs_grad(a),
                [ia](Tape& tp, const matrix_t& g) { tp.accumulate(ia, g.transpose()); });
}

Var dot(Var a, Var b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "dot");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  matrix_t y(1, 1);
  y(0, 0) = a.value().cwiseProduct(b.value()).sum();
  return t.make(std::move(y), t.needs_grad(a) || t.needs_grad(b),
                [ia, ib](Tape& tp, const matrix_t& g) {
                  tp.accumulate(ia, tp.val(ib) * g(0, 0));
                  tp.accumulate(ib, tp.val(ia) * g(0, 0));
                });
}

// ---- structure ----

Var vcat(Var a, Var b) {
  check_same_tape(a, b);
  if (a.cols() != b.cols()) throw ShapeError("ag: vcat column mismatch");
  Tape& t = *a.tape();
  matrix_t y(a.rows() + b.rows(), a.cols());
  y.topRows(a.rows()) = a.value();
  y.bottomRows(b.rows()) = b.value();
  const int ia = a.id(), ib = b.id();
  const index_t ra = a.rows(), rb = b.rows();
  return t.make(std::move(y), t.needs_grad(a) || t.needs_grad(b),
                [ia, ib, ra, rb](Tape& tp, const matrix_t& g) {
                  tp.accumulate(ia, g.topRows(ra));
                  tp.accumulate(ib, g.bottomRows(rb));
                });
}

Var hcat(Var a, Var b) {
  check_same_tape(a, b);
  if (a.rows() != b.rows()) throw ShapeError("ag: hcat row mismatch");
  Tape& t = *a.tape();
  matrix_t y(a.rows(), a.cols() + b.cols());
  y.leftCols(a.cols()) = a.value();
  y.rightCols(b.cols()) = b.value();
  const int ia = a.id(), ib = b.id();
  const index_t ca = a.cols(), cb = b.cols();
  return t.make(std::move(y), t.needs_grad(a) || t.needs_grad(b),
                [ia, ib, ca, cb](Tape& tp, const matrix_t& g) {
                  tp.accumulate(ia, g.leftCols(ca));
                  tp.accumulate(ib, g.rightCols(cb));
                });
}

Var hstack(std::span<const Var> cols) {
  if (cols.empty()) throw ShapeError("ag: hstack of nothing");
  Tape& t = *cols[0].tape();
  index_t total = 0;
  for (const Var& c : cols) {
    check_same_tape(cols[0], c);
    if (c.rows() != cols[0].rows()) throw ShapeError("ag: hstack row mismatch");
    total += c.cols();
  }
  matrix_t y(cols[0].rows(), total);
  std::vector<int> ids;
  std::vector<index_t> widths;
  ids.reserve(cols.size());
  widths.reserve(cols.size());
  bool ng = false;
  index_t at = 0;
  for (const Var& c : cols) {
    y.middleCols(at, c.cols()) = c.value();
    at += c.cols();
    ids.push_back(c.id());
    widths.push_back(c.cols());
    ng = ng || t.needs_grad(c);
  }
  return t.make(std::move(y), ng,
                [ids = std::move(ids), widths = std::move(widths)](Tape& tp, const matrix_t& g) {
                  index_t at = 0;
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    tp.accumulate(ids[k], g.middleCols(at, widths[k]));
                    at += widths[k];
                  }
                });
}

Var first_cols(Var a, index_t k) {
  if (k < 1 || k > a.cols()) throw ShapeError("ag: first_cols out of range");
  Tape& t = *a.tape();
  const int ia = a.id();
  const index_t cols_total = a.cols();
  return t.make(a.value().leftCols(k), t.needs_grad(a),
                [ia, k, cols_total](Tape& tp, const matrix_t& g) {
                  matrix_t gx = matrix_t::Zero(g.rows(), cols_total);
                  gx.leftCols(k) = g;
                  tp.accumulate(ia, gx);
                });
}

Var gather_cols(Var a, std::span<const int> idx) {
  if (idx.empty()) throw ShapeError("ag: gather_cols with empty index list");
  Tape& t = *a.tape();
  matrix_t y(a.rows(), static_cast<index_t>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= a.cols()) throw ShapeError("ag: gather_cols index out of range");
    y.col(static_cast<index_t>(j)) = a.value().col(idx[j]);
  }
  const int ia = a.id();
  const index_t cols_total = a.cols();
  std::vector<int> ids(idx.begin(), idx.end());
  return t.make(std::move(y), t.needs_grad(a),
                [ia, cols_total, ids = std::move(ids)](Tape& tp, const matrix_t& g) {
                  matrix_t gx = matrix_t::Zero(g.rows(), cols_total);
                  for (std::size_t j = 0; j < ids.size(); ++j)
                    gx.col(ids[j]) += g.col(static_cast<index_t>(j));
                  tp.accumulate(ia, gx);
                });
}

Var bcast_add_col(Var col, Var m) {
  check_same_tape(col, m);
  if (col.cols() != 1 || col.rows() != m.rows()) throw ShapeError("ag: bcast_add_col shape mismatch");
  Tape& t = *col.tape();
  matrix_t y = m.value();
  y.colwise() += vector_t(col.value());
  const int ic = col.id(), im = m.id();
  return t.make(std::move(y), t.needs_grad(col) || t.needs_grad(m),
                [ic, im](Tape& tp, const matrix_t& g) {
                  tp.accumulate(im, g);
                  tp.accumulate(ic, g.rowwise().sum());
                });
}

Var row_lookup(Var table, vocab_id row) {
  if (row < 0 || row >= table.rows()) throw ShapeError("ag: row_lookup out of range");
  Tape& t = *table.tape();
  const int it = table.id();
  const index_t rows_total = table.rows(), cols_total = table.cols();
  return t.make(table.value().row(row).transpose(), t.needs_grad(table),
                [it, row, rows_total, cols_total](Tape& tp, const matrix_t& g) {
                  matrix_t gx = matrix_t::Zero(rows_total, cols_total);
                  gx.row(row) = g.transpose();
                  tp.accumulate(it, gx);
                });
}

Var mean_rows(Var table, std::span<const vocab_id> rows) {
  if (rows.empty()) throw std::invalid_argument("ag: mean_rows over an empty set");
  Tape& t = *table.tape();
  vector_t y = vector_t::Zero(table.cols());
  for (vocab_id r : rows) {
    if (r < 0 || r >= table.rows()) throw ShapeError("ag: mean_rows index out of range");
    y += table.value().row(r).transpose();
  }
  y /= static_cast<scalar_t>(rows.size());
  const int it = table.id();
  const index_t rows_total = table.rows(), cols_total = table.cols();
  std::vector<vocab_id> ids(rows.begin(), rows.end());
  return t.make(matrix_t(y), t.needs_grad(table),
                [it, rows_total, cols_total, ids = std::move(ids)](Tape& tp, const matrix_t& g) {
                  matrix_t gx = matrix_t::Zero(rows_total, cols_total);
                  const scalar_t w = scalar_t(1) / static_cast<scalar_t>(ids.size());
                  for (vocab_id r : ids) gx.row(r) += g.transpose() * w;
                  tp.accumulate(it, gx);
                });
}

Var scatter_rows(Var s, std::span<const vocab_id> ids, index_t size) {
  if (s.cols() != 1) throw ShapeError("ag: scatter_rows expects a column vector");
  if (static_cast<index_t>(ids.size()) != s.rows()) throw ShapeError("ag: scatter_rows length mismatch");
  Tape& t = *s.tape();
  vector_t y = vector_t::Zero(size);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || ids[k] >= size) throw ShapeError("ag: scatter_rows id out of range");
    y(ids[k]) += s.value()(static_cast<index_t>(k), 0);
  }
  const int is = s.id();
  std::vector<vocab_id> idv(ids.begin(), ids.end());
  return t.make(matrix_t(y), t.needs_grad(s),
                [is, idv = std::move(idv)](Tape& tp, const matrix_t& g) {
                  matrix_t gs(static_cast<index_t>(idv.size()), 1);
                  for (std::size_t k = 0; k < idv.size(); ++k)
                    gs(static_cast<index_t>(k), 0) = g(idv[k], 0);
                  tp.accumulate(is, gs);
                });
}

Var pick(Var v, index_t i) {
  if (v.cols() != 1) throw ShapeError("ag: pick expects a column vector");
  if (i < 0 || i >= v.rows()) throw ShapeError("ag: pick index out of range");
  Tape& t = *v.tape();
  const int iv = v.id();
  const index_t n = v.rows();
  matrix_t y(1, 1);
  y(0, 0) = v.value()(i, 0);
  return t.make(std::move(y), t.needs_grad(v),
                [iv, i, n](Tape& tp, const matrix_t& g) {
                  matrix_t gx = matrix_t::Zero(n, 1);
                  gx(i, 0) = g(0, 0);
                  tp.accumulate(iv, gx);
                });
}

Var sum(std::span<const Var> terms) {
  if (terms.empty()) throw ShapeError("ag: sum of nothing");
  Tape& t = *terms[0].tape();
  matrix_t y = terms[0].value();
  bool ng = t.needs_grad(terms[0]);
  std::vector<int> ids{terms[0].id()};
  ids.reserve(terms.size());
  for (std::size_t k = 1; k < terms.size(); ++k) {
    check_same_tape(terms[0], terms[k]);
    check_same_shape(terms[0], terms[k], "sum");
    y += terms[k].value();
    ng = ng || t.needs_grad(terms[k]);
    ids.push_back(terms[k].id());
  }
  return t.make(std::move(y), ng,
                [ids = std::move(ids)](Tape& tp, const matrix_t& g) {
                  for (int id : ids) tp.accumulate(id, g);
                });
}

Var masked_softmax(Var logits, const mask_t& mask) {
  if (logits.cols() != 1) throw ShapeError("ag: masked_softmax expects a column vector");
  if (static_cast<index_t>(mask.size()) != logits.rows())
    throw ShapeError("ag: masked_softmax mask length mismatch");
  const vector_t x = logits.value().col(0);
  scalar_t mx = -std::numeric_limits<scalar_t>::infinity();
  bool any = false;
  for (index_t i = 0; i < x.size(); ++i)
    if (mask[i]) {
      any = true;
      mx = std::max(mx, x(i));
    }
  if (!any) throw std::invalid_argument("ag: masked_softmax with all positions masked");
  vector_t y = vector_t::Zero(x.size());
  scalar_t z = 0;
  for (index_t i = 0; i < x.size(); ++i)
    if (mask[i]) {
      y(i) = std::exp(x(i) - mx);
      z += y(i);
    }
  y /= z;
  Tape& t = *logits.tape();
  const int il = logits.id();
  Var out = t.make(matrix_t(y), t.needs_grad(logits), nullptr);
  if (t.needs_grad(logits)) {
    const int io = out.id();
    t.set_back(out, [il, io, m = mask](Tape& tp, const matrix_t& g) {
      const matrix_t& yv = tp.val(io);
      scalar_t inner = 0;
      for (index_t i = 0; i < yv.rows(); ++i)
        if (m[i]) inner += g(i, 0) * yv(i, 0);
      matrix_t gx = matrix_t::Zero(yv.rows(), 1);
      for (index_t i = 0; i < yv.rows(); ++i)
        if (m[i]) gx(i, 0) = yv(i, 0) * (g(i, 0) - inner);
      tp.accumulate(il, gx);
    });
  }
  return out;
}

}  // namespace sessrec::ag
