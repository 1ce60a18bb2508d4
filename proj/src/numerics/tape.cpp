#include "gunl/numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gunl/errors.hpp"

namespace gunl {

namespace {

constexpr double kLogFloor = 1e-12;

std::string shape_str(const Dense& d) {
  return std::to_string(d.rows()) + "x" + std::to_string(d.cols());
}

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw ContractError("Var is not attached to a tape");
  return *a.tape;
}

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw ContractError("operands live on different tapes");
  return *a.tape;
}

void require_same_shape(const char* op, const Dense& a, const Dense& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
  }
}

}  // namespace

const Dense& Var::value() const { return tape_of(*this).value(id); }

Var Tape::constant(Dense value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::constant_ref(const Dense& value) {
  Node n;
  n.external = &value;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  Node n;
  n.external = &store.value(name);
  n.requires_grad = true;
  n.store = &store;
  n.param_name = name;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(Dense value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](std::size_t i) { return nodes_[i].requires_grad; });
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Dense& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.owned;
}

Dense& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !value(id).empty()) {
    n.grad = Dense(value(id).rows(), value(id).cols());
  }
  return n.grad;
}

const Dense& Tape::grad(Var v) const { return nodes_.at(v.id).grad; }

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
  const Dense& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be scalar, got " + shape_str(lv));
  }
  for (auto& n : nodes_) n.grad = Dense();
  grad(loss.id)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

GradMap Tape::gradients(Var loss, const ParamStore& params) {
  backward(loss);
  GradMap out;
  for (const auto& [name, slot] : params.slots()) {
    out.emplace(name, Dense(slot.value.rows(), slot.value.cols()));
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    const Node& n = nodes_[i];
    if (n.store != &params || n.grad.empty()) continue;
    dense::add_inplace(out.at(n.param_name), n.grad);
  }
  return out;
}

GradMap gradients(Var loss, const ParamStore& params) {
  return tape_of(loss).gradients(loss, params);
}

namespace ad {

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Dense out = dense::matmul(a.value(), b.value());
  return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    if (t.requires_grad(a.id)) dense::matmul_nt_accumulate(g, t.value(b.id), t.grad(a.id));
    if (t.requires_grad(b.id)) dense::matmul_tn_accumulate(t.value(a.id), g, t.grad(b.id));
  });
}

Var spmm(const Sparse& a, Var x) {
  Tape& t = tape_of(x);
  Dense out = a.multiply(x.value());
  const Sparse* ap = &a;
  return t.record(std::move(out), {x.id}, [ap, x](Tape& t, std::size_t self) {
    ap->multiply_transpose_accumulate(t.grad(self), t.grad(x.id));
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  return t.record(dense::transpose(a.value()), {a.id}, [a](Tape& t, std::size_t self) {
    dense::add_inplace(t.grad(a.id), dense::transpose(t.grad(self)));
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("add", a.value(), b.value());
  Dense out = a.value();
  dense::add_inplace(out, b.value());
  return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& t, std::size_t self) {
    if (t.requires_grad(a.id)) dense::add_inplace(t.grad(a.id), t.grad(self));
    if (t.requires_grad(b.id)) dense::add_inplace(t.grad(b.id), t.grad(self));
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("sub", a.value(), b.value());
  Dense out = a.value();
  dense::add_inplace(out, b.value(), -1.0);
  return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& t, std::size_t self) {
    if (t.requires_grad(a.id)) dense::add_inplace(t.grad(a.id), t.grad(self));
    if (t.requires_grad(b.id)) dense::add_inplace(t.grad(b.id), t.grad(self), -1.0);
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("mul", a.value(), b.value());
  Dense out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    if (t.requires_grad(a.id)) {
      Dense& ga = t.grad(a.id);
      const Dense& bv = t.value(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * bv.data()[i];
    }
    if (t.requires_grad(b.id)) {
      Dense& gb = t.grad(b.id);
      const Dense& av = t.value(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * av.data()[i];
    }
  });
}

Var div(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape("div", a.value(), b.value());
  Dense out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] /= b.value().data()[i];
  return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    const Dense& bv = t.value(b.id);
    if (t.requires_grad(a.id)) {
      Dense& ga = t.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] / bv.data()[i];
    }
    if (t.requires_grad(b.id)) {
      Dense& gb = t.grad(b.id);
      const Dense& out = t.value(self);
      for (std::size_t i = 0; i < g.size(); ++i)
        gb.data()[i] -= g.data()[i] * out.data()[i] / bv.data()[i];
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  Dense out = a.value();
  for (double& v : out.values()) v *= s;
  return t.record(std::move(out), {a.id}, [a, s](Tape& t, std::size_t self) {
    dense::add_inplace(t.grad(a.id), t.grad(self), s);
  });
}

Var add_scalar(Var a, double s) {
  Tape& t = tape_of(a);
  Dense out = a.value();
  for (double& v : out.values()) v += s;
  return t.record(std::move(out), {a.id}, [a](Tape& t, std::size_t self) {
    dense::add_inplace(t.grad(a.id), t.grad(self));
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
  Tape& t = tape_of(a);
  Dense out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return t.record(std::move(out), {a.id}, [a](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    const Dense& av = t.value(a.id);
    Dense& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (av.data()[i] > 0.0) ga.data()[i] += g.data()[i];
  });
}

Var exp(Var a) {
  Tape& t = tape_of(a);
  Dense out = a.value();
  for (double& v : out.values()) v = std::exp(v);
  return t.record(std::move(out), {a.id}, [a](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    const Dense& out = t.value(self);
    Dense& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * out.data()[i];
  });
}

Var log(Var a) {
  Tape& t = tape_of(a);
  Dense out = a.value();
  for (double& v : out.values()) v = std::log(std::max(v, kLogFloor));
  return t.record(std::move(out), {a.id}, [a](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    const Dense& av = t.value(a.id);
    Dense& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (av.data()[i] > kLogFloor) ga.data()[i] += g.data()[i] / av.data()[i];
  });
}

Var clamp_min(Var a, double lo) {
  Tape& t = tape_of(a);
  Dense out = a.value();
  for (double& v : out.values()) v = std::max(v, lo);
  return t.record(std::move(out), {a.id}, [a, lo](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    const Dense& av = t.value(a.id);
    Dense& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (av.data()[i] > lo) ga.data()[i] += g.data()[i];
  });
}

Var row_softmax(Var a) {
  Tape& t = tape_of(a);
  Dense out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (row.empty()) continue;
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) {
      v = std::exp(v - m);
      z += v;
    }
    for (double& v : row) v /= z;
  }
  return t.record(std::move(out), {a.id}, [a](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    const Dense& s = t.value(self);
    Dense& ga = t.grad(a.id);
    for (std::size_t r = 0; r < s.rows(); ++r) {
      auto sr = s.row(r);
      auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t j = 0; j < sr.size(); ++j) dot += gr[j] * sr[j];
      auto gar = ga.row(r);
      for (std::size_t j = 0; j < sr.size(); ++j) gar[j] += sr[j] * (gr[j] - dot);
    }
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return t.record(Dense::scalar(s), {a.id}, [a](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    for (double& v : t.grad(a.id).values()) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of an empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var col_sums(Var a) {
  Tape& t = tape_of(a);
  const Dense& av = a.value();
  Dense out(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) out(0, c) += av(r, c);
  return t.record(std::move(out), {a.id}, [a](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    Dense& ga = t.grad(a.id);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(0, c);
  });
}

Var row_sums(Var a) {
  Tape& t = tape_of(a);
  const Dense& av = a.value();
  Dense out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, 0) += av(r, c);
  return t.record(std::move(out), {a.id}, [a](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    Dense& ga = t.grad(a.id);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(r, 0);
  });
}

Var row_l2norm(Var a) {
  Tape& t = tape_of(a);
  const Dense& av = a.value();
  Dense out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (double v : av.row(r)) s += v * v;
    out(r, 0) = std::sqrt(s);
  }
  return t.record(std::move(out), {a.id}, [a](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    const Dense& nrm = t.value(self);
    const Dense& av = t.value(a.id);
    Dense& ga = t.grad(a.id);
    for (std::size_t r = 0; r < av.rows(); ++r) {
      // subgradient 0 at the origin
      if (nrm(r, 0) == 0.0) continue;
      const double k = g(r, 0) / nrm(r, 0);
      for (std::size_t c = 0; c < av.cols(); ++c) ga(r, c) += k * av(r, c);
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(a);
  const Dense& av = a.value();
  if (begin > end || end > av.cols()) throw ShapeError("slice_cols: range outside " + shape_str(av));
  Dense out(av.rows(), end - begin);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = av(r, c);
  return t.record(std::move(out), {a.id}, [a, begin](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    Dense& ga = t.grad(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c + begin) += g(r, c);
  });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  Tape& t = tape_of(a);
  const Dense& av = a.value();
  Dense out(rows.size(), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= av.rows()) throw ShapeError("gather_rows: row index out of range");
    std::copy(av.row(rows[i]).begin(), av.row(rows[i]).end(), out.row(i).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return t.record(std::move(out), {a.id}, [a, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    Dense& ga = t.grad(a.id);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = g.row(i);
      auto dst = ga.row(idx[i]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no operands");
  Tape& t = tape_of(parts[0]);
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    tape_of(parts[0], p);
    if (p.value().rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.value().cols();
    ids.push_back(p.id);
  }
  Dense out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Dense& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols();
  }
  std::vector<std::size_t> inputs = ids;
  return t.record(std::move(out), std::move(inputs), [ids](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t id : ids) {
      const std::size_t w = t.value(id).cols();
      if (t.requires_grad(id)) {
        Dense& gp = t.grad(id);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) gp(r, c) += g(r, offset + c);
      }
      offset += w;
    }
  });
}

Var broadcast_rows(Var row, std::size_t n) {
  Tape& t = tape_of(row);
  const Dense& rv = row.value();
  if (rv.rows() != 1) throw ShapeError("broadcast_rows: expected 1xc, got " + shape_str(rv));
  Dense out(n, rv.cols());
  for (std::size_t r = 0; r < n; ++r) std::copy(rv.values().begin(), rv.values().end(), out.row(r).begin());
  return t.record(std::move(out), {row.id}, [row](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    Dense& gr = t.grad(row.id);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
  });
}

Var broadcast_cols(Var col, std::size_t c) {
  Tape& t = tape_of(col);
  const Dense& cv = col.value();
  if (cv.cols() != 1) throw ShapeError("broadcast_cols: expected nx1, got " + shape_str(cv));
  Dense out(cv.rows(), c);
  for (std::size_t r = 0; r < cv.rows(); ++r)
    for (std::size_t j = 0; j < c; ++j) out(r, j) = cv(r, 0);
  return t.record(std::move(out), {col.id}, [col](Tape& t, std::size_t self) {
    const Dense& g = t.grad(self);
    Dense& gc = t.grad(col.id);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t j = 0; j < g.cols(); ++j) gc(r, 0) += g(r, j);
  });
}

}  // namespace ad
}  // namespace gunl
