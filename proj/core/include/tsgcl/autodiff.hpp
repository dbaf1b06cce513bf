#pragma once

// Reverse-mode differentiation over dense tensors.
//
// A Tape lives for exactly one forward pass. Every operation appends a node
// holding its value and a closure that pushes the incoming gradient to its
// inputs. Nodes are appended in evaluation order, so the tape is always
// topologically sorted and the reverse pass is a single backwards sweep.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsgcl/tensor.hpp"

namespace tsgcl::ad {

class Tape;
class Gradients;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using BackwardFn = std::function<void(const Tensor& grad_out, Gradients& grads)>;

/// Gradient table produced by Tape::backward, indexed by node id.
class Gradients {
 public:
  Gradients(const Tape& tape);

  bool has(Var v) const;
  /// Gradient for `v`; zeros shaped like `v` when nothing reached it.
  Tensor of(Var v) const;

  /// Accumulation target for `v`, or nullptr when `v` does not require grad.
  /// Zero-initialised on first touch.
  Tensor* target(Var v);
  void add(Var v, const Tensor& g);

  std::size_t size() const noexcept { return grads_.size(); }
  const Tensor& raw(std::size_t id) const { return grads_[id]; }

 private:
  friend class Tape;
  const Tape* tape_;
  std::vector<Tensor> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records `value` as a leaf. It takes part in differentiation iff
  /// value.requires_grad() is set.
  Var leaf(Tensor value);
  Var constant(Tensor value);

  /// Appends an operation node. Throws NumericError(op) if `value` holds a
  /// NaN or Inf. `backward` is dropped when no input requires grad.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs,
             BackwardFn backward);
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  /// Reverse pass from a scalar (single-element) node. Does not mutate the
  /// tape, so calling it twice yields identical tables.
  Gradients backward(Var loss) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::string_view op(std::size_t id) const { return nodes_[id].op; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

 private:
  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    Tensor value;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// ---- operations -----------------------------------------------------------
// Matrices are rank 2, vectors rank 1. All operations throw ShapeError on
// incompatible operands.

/// a[m x k] * b[k x n] -> [m x n]. A rank-1 b[k] is a column and yields [m];
/// a rank-1 a[k] is a row and yields [n].
Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// matrix[m x n] + vector[n] added to every row.
Var add_row(Var matrix, Var row);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
/// Multiplies every element of `a` by the single element of `s`.
Var mul_scalar(Var a, Var s);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var exp(Var a);
Var sqrt(Var a);
Var reciprocal(Var a);
/// log(max(a, floor)); the gradient is zero where the floor is active.
Var log_floor(Var a, double floor);

/// Concatenation along `axis`. Rank-1 inputs only support axis 0.
Var concat(std::span<const Var> parts, std::size_t axis = 0);
Var concat(std::initializer_list<Var> parts, std::size_t axis = 0);
/// Stacks equal-length vectors into the rows of a matrix.
Var stack_rows(std::span<const Var> rows);

/// Same elements, new shape; element counts must agree.
Var reshape(Var a, Shape shape);
Var row(Var matrix, std::size_t r);
Var gather_rows(Var matrix, std::span<const std::size_t> indices);
Var slice(Var vec, std::size_t begin, std::size_t length);
Var column_block(Var matrix, std::size_t begin, std::size_t length);
/// Element `index` of a vector, as a [1] tensor.
Var element(Var vec, std::size_t index);
/// One element per row of a matrix: out[r] = m[r, indices[r]].
Var pick(Var matrix, std::span<const std::size_t> indices);

Var sum(Var a);
Var mean(Var a);
/// Rank 1: softmax over all elements. Rank 2: row-wise softmax.
Var softmax(Var a);

/// out[i, j] = || x_i - y_j ||^2 over the rows of x and y.
Var pairwise_sqdist(Var x, Var y);
/// Strict upper triangle of a square matrix, row-major, as a vector.
Var upper_triangle(Var square);
/// Median of a vector; the mean of the two middle elements for even length.
Var median(Var vec);

}  // namespace tsgcl::ad
