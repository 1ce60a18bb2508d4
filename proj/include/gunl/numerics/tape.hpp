#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gunl/numerics/dense.hpp"
#include "gunl/numerics/param_store.hpp"
#include "gunl/numerics/sparse.hpp"

namespace gunl {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Dense& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode differentiation over a linear record of primitive ops.
///
/// Nodes are appended in evaluation order, so the record is topologically
/// sorted by construction and backward() is a single reverse sweep. Constants
/// and parameters may reference external storage (constant_ref/param), which
/// must outlive the tape and stay unmodified while it is in use.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Dense value);
  Var constant_ref(const Dense& value);
  /// Leaf bound to `store.value(name)`; gradients() reports it under `name`.
  Var param(const ParamStore& store, const std::string& name);

  /// Appends an op result. `backward` receives the node id and must add into
  /// the gradients of the inputs it differentiates.
  Var record(Dense value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Dense& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, allocated as zeros on first use.
  Dense& grad(std::size_t id);
  const Dense& grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

  /// Holds `data` until the tape is destroyed, for operands such as a sparse
  /// matrix built only for this tape.
  void keep_alive(std::shared_ptr<const void> data) { kept_.push_back(std::move(data)); }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every node. `loss` must be 1x1.
  void backward(Var loss);

  /// Gradients of `loss` for every parameter of `params`; parameters that the
  /// loss does not reach get zeros.
  GradMap gradients(Var loss, const ParamStore& params);

 private:
  struct Node {
    Dense owned;
    const Dense* external = nullptr;
    Dense grad;
    bool requires_grad = false;
    const ParamStore* store = nullptr;
    std::string param_name;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::vector<std::shared_ptr<const void>> kept_;
};

/// Free-function gradients(); same as Tape::gradients on loss.tape.
GradMap gradients(Var loss, const ParamStore& params);

/// Differentiable primitives. All operands must live on the same tape.
namespace ad {

Var matmul(Var a, Var b);
/// A * x for constant sparse A (A must outlive the tape).
Var spmm(const Sparse& a, Var x);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);

Var relu(Var a);
Var exp(Var a);
/// Natural log with inputs clamped below at 1e-12 (zero gradient where clamped).
Var log(Var a);
/// max(a, lo) entrywise; gradient passes only where a > lo.
Var clamp_min(Var a, double lo);
/// Numerically stable softmax over each row.
Var row_softmax(Var a);

/// Sum of every entry (1x1).
Var sum(Var a);
Var mean(Var a);
/// Column sums as a 1 x cols row.
Var col_sums(Var a);
/// Row sums as a rows x 1 column.
Var row_sums(Var a);
/// Euclidean norm of each row as a rows x 1 column.
Var row_l2norm(Var a);

Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var gather_rows(Var a, std::span<const std::size_t> rows);
Var concat_cols(std::span<const Var> parts);

/// Repeats a 1 x c row n times.
Var broadcast_rows(Var row, std::size_t n);
/// Repeats an n x 1 column c times.
Var broadcast_cols(Var col, std::size_t c);

}  // namespace ad
}  // namespace gunl
