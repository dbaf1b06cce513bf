#include "tsgcl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsgcl/error.hpp"

namespace tsgcl::ad {

// ---- Var / Gradients / Tape -------------------------------------------------

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Gradients::Gradients(const Tape& tape) : tape_(&tape), grads_(tape.size()) {}

bool Gradients::has(Var v) const { return v.id() < grads_.size() && !grads_[v.id()].empty(); }

Tensor Gradients::of(Var v) const {
  if (has(v)) return grads_[v.id()];
  return Tensor(v.shape());
}

Tensor* Gradients::target(Var v) {
  if (!tape_->requires_grad(v.id())) return nullptr;
  Tensor& g = grads_[v.id()];
  if (g.empty()) g = Tensor(tape_->value(v.id()).shape());
  return &g;
}

void Gradients::add(Var v, const Tensor& g) {
  if (Tensor* t = target(v)) {
    auto dst = t->data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

Var Tape::leaf(Tensor value) {
  const bool rg = value.requires_grad();
  return record(rg ? "parameter" : "constant", std::move(value), {}, nullptr);
}

Var Tape::constant(Tensor value) {
  value.set_requires_grad(false);
  return record("constant", std::move(value), {}, nullptr);
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs,
                 BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(std::string(op), "non-finite value in forward pass");
  Node node;
  node.op = std::string(op);
  node.requires_grad = inputs.empty() && value.requires_grad();
  for (const Var& in : inputs) {
    if (in.tape() != this) throw Error("operand of " + node.op + " belongs to another tape");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad && !inputs.empty()) node.backward = std::move(backward);
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape() != this) throw Error("backward: loss belongs to another tape");
  if (loss.size() != 1)
    throw ShapeError("backward: loss must be a scalar, got " + to_string(loss.shape()));
  if (!nodes_[loss.id()].requires_grad)
    throw Error("backward: loss is detached from every differentiable leaf");

  Gradients grads(*this);
  grads.grads_[loss.id()] = Tensor(loss.shape(), 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.backward || grads.grads_[i].empty()) continue;
    if (!grads.grads_[i].all_finite())
      throw NumericError(node.op, "non-finite gradient in backward pass");
    // The closure may write into grads_[j] for j < i only, so a copy is not
    // needed to keep this reference stable.
    const Tensor& g = grads.grads_[i];
    node.backward(g, grads);
  }
  return grads;
}

// ---- helpers ----------------------------------------------------------------

namespace {

[[noreturn]] void shape_fail(std::string_view op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

void require_same_shape(std::string_view op, Var a, Var b) {
  if (a.shape() != b.shape())
    shape_fail(op, "shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

void require_matrix(std::string_view op, Var a) {
  if (a.value().rank() != 2) shape_fail(op, "expected a matrix, got " + to_string(a.shape()));
}

void require_vector(std::string_view op, Var a) {
  if (a.value().rank() != 1) shape_fail(op, "expected a vector, got " + to_string(a.shape()));
}

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c[m x k] += g[m x n] * b[k x n]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* g, const double* b,
             double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
      c[i * k + p] += acc;
    }
  }
}

// c[k x n] += a[m x k]^T * g[m x n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* g,
             double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * gi[j];
    }
  }
}

template <class F, class D>
Var unary(std::string_view op, Var a, F f, D dfdx) {
  Tensor out(a.shape());
  const auto& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  Tensor y = out;
  return a.tape()->record(op, std::move(out), {a},
                          [a, y = std::move(y), dfdx](const Tensor& g, Gradients& grads) {
                            if (Tensor* ga = grads.target(a)) {
                              const auto& x = a.value();
                              for (std::size_t i = 0; i < g.size(); ++i)
                                (*ga)[i] += g[i] * dfdx(x[i], y[i]);
                            }
                          });
}

}  // namespace

// ---- linear algebra ---------------------------------------------------------

Var matmul(Var a, Var b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  std::size_t m, k, k2, n;
  Shape out_shape;
  if (av.rank() == 2 && bv.rank() == 2) {
    m = av.shape()[0], k = av.shape()[1], k2 = bv.shape()[0], n = bv.shape()[1];
    out_shape = {m, n};
  } else if (av.rank() == 2 && bv.rank() == 1) {
    m = av.shape()[0], k = av.shape()[1], k2 = bv.shape()[0], n = 1;
    out_shape = {m};
  } else if (av.rank() == 1 && bv.rank() == 2) {
    m = 1, k = av.shape()[0], k2 = bv.shape()[0], n = bv.shape()[1];
    out_shape = {n};
  } else {
    shape_fail("matmul", "unsupported ranks " + to_string(av.shape()) + " x " + to_string(bv.shape()));
  }
  if (k != k2)
    shape_fail("matmul", "inner dimensions disagree: " + to_string(av.shape()) + " x " +
                             to_string(bv.shape()));
  Tensor out(out_shape);
  gemm_nn(m, k, n, av.data().data(), bv.data().data(), out.data().data());
  return a.tape()->record("matmul", std::move(out), {a, b},
                          [a, b, m, k, n](const Tensor& g, Gradients& grads) {
                            if (Tensor* ga = grads.target(a))
                              gemm_nt(m, n, k, g.data().data(), b.value().data().data(),
                                      ga->data().data());
                            if (Tensor* gb = grads.target(b))
                              gemm_tn(m, k, n, a.value().data().data(), g.data().data(),
                                      gb->data().data());
                          });
}

Var transpose(Var a) {
  require_matrix("transpose", a);
  return a.tape()->record("transpose", a.value().transposed(), {a},
                          [a](const Tensor& g, Gradients& grads) {
                            if (grads.target(a)) grads.add(a, g.transposed());
                          });
}

// ---- elementwise --------------------------------------------------------------

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  out.set_requires_grad(false);
  return a.tape()->record("add", std::move(out), {a, b}, [a, b](const Tensor& g, Gradients& grads) {
    grads.add(a, g);
    grads.add(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  out.set_requires_grad(false);
  return a.tape()->record("sub", std::move(out), {a, b}, [a, b](const Tensor& g, Gradients& grads) {
    grads.add(a, g);
    if (Tensor* gb = grads.target(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return a.tape()->record("mul", std::move(out), {a, b}, [a, b](const Tensor& g, Gradients& grads) {
    if (Tensor* ga = grads.target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b.value()[i];
    if (Tensor* gb = grads.target(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a.value()[i];
  });
}

Var add_row(Var matrix, Var r) {
  require_matrix("add_row", matrix);
  require_vector("add_row", r);
  const std::size_t rows = matrix.shape()[0], cols = matrix.shape()[1];
  if (r.shape()[0] != cols)
    shape_fail("add_row", "row of " + to_string(r.shape()) + " for matrix " +
                              to_string(matrix.shape()));
  Tensor out = matrix.value();
  out.set_requires_grad(false);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) += r.value()[j];
  return matrix.tape()->record("add_row", std::move(out), {matrix, r},
                               [matrix, r, rows, cols](const Tensor& g, Gradients& grads) {
                                 grads.add(matrix, g);
                                 if (Tensor* gr = grads.target(r))
                                   for (std::size_t i = 0; i < rows; ++i)
                                     for (std::size_t j = 0; j < cols; ++j) (*gr)[j] += g.at(i, j);
                               });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var mul_scalar(Var a, Var s) {
  if (s.size() != 1) shape_fail("mul_scalar", "scale factor must have one element");
  const double f = s.value()[0];
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * f;
  return a.tape()->record("mul_scalar", std::move(out), {a, s},
                          [a, s](const Tensor& g, Gradients& grads) {
                            const double f = s.value()[0];
                            if (Tensor* ga = grads.target(a))
                              for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * f;
                            if (Tensor* gs = grads.target(s)) {
                              double acc = 0.0;
                              for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * a.value()[i];
                              (*gs)[0] += acc;
                            }
                          });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

// The derivative at 0 is taken as 0: zero distances only arise between
// duplicate points, where no direction is preferred.
Var sqrt(Var a) {
  for (double v : a.value().data())
    if (v < 0) throw NumericError("sqrt", "negative argument");
  return unary(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0 ? 0.5 / y : 0.0; });
}

Var reciprocal(Var a) {
  return unary(
      "reciprocal", a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

Var log_floor(Var a, double floor) {
  return unary(
      "log", a, [floor](double x) { return std::log(std::max(x, floor)); },
      [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

// ---- structural ---------------------------------------------------------------

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) shape_fail("concat", "no operands");
  const std::size_t rank = parts[0].value().rank();
  if (rank == 0 || rank > 2) shape_fail("concat", "unsupported rank");
  if (axis >= rank) shape_fail("concat", "axis " + std::to_string(axis) + " out of range");
  for (const Var& p : parts)
    if (p.value().rank() != rank) shape_fail("concat", "operands of different rank");

  if (rank == 1) {
    std::vector<double> data;
    for (const Var& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    std::vector<Var> inputs(parts.begin(), parts.end());
    return parts[0].tape()->record(
        "concat", Tensor::vector(std::move(data)), parts,
        [inputs](const Tensor& g, Gradients& grads) {
          std::size_t off = 0;
          for (const Var& p : inputs) {
            if (Tensor* gp = grads.target(p))
              for (std::size_t i = 0; i < p.size(); ++i) (*gp)[i] += g[off + i];
            off += p.size();
          }
        });
  }

  const std::size_t other = 1 - axis;
  const std::size_t fixed = parts[0].shape()[other];
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.shape()[other] != fixed) shape_fail("concat", "mismatched extent off the concat axis");
    total += p.shape()[axis];
  }
  Shape shape = axis == 0 ? Shape{total, fixed} : Shape{fixed, total};
  Tensor out(shape);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const auto& v = p.value();
    for (std::size_t r = 0; r < v.shape()[0]; ++r)
      for (std::size_t c = 0; c < v.shape()[1]; ++c) {
        if (axis == 0) out.at(off + r, c) = v.at(r, c);
        else out.at(r, off + c) = v.at(r, c);
      }
    off += v.shape()[axis];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape()->record("concat", std::move(out), parts,
                                 [inputs, axis](const Tensor& g, Gradients& grads) {
                                   std::size_t off = 0;
                                   for (const Var& p : inputs) {
                                     const auto& sh = p.shape();
                                     if (Tensor* gp = grads.target(p))
                                       for (std::size_t r = 0; r < sh[0]; ++r)
                                         for (std::size_t c = 0; c < sh[1]; ++c)
                                           gp->at(r, c) += axis == 0 ? g.at(off + r, c)
                                                                     : g.at(r, off + c);
                                     off += sh[axis];
                                   }
                                 });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) shape_fail("stack_rows", "no operands");
  const std::size_t d = rows[0].size();
  std::vector<double> data;
  data.reserve(d * rows.size());
  for (const Var& r : rows) {
    require_vector("stack_rows", r);
    if (r.size() != d) shape_fail("stack_rows", "rows of different length");
    data.insert(data.end(), r.value().data().begin(), r.value().data().end());
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  return rows[0].tape()->record("stack_rows", Tensor({rows.size(), d}, std::move(data)), rows,
                                [inputs, d](const Tensor& g, Gradients& grads) {
                                  for (std::size_t r = 0; r < inputs.size(); ++r)
                                    if (Tensor* gr = grads.target(inputs[r]))
                                      for (std::size_t j = 0; j < d; ++j) (*gr)[j] += g[r * d + j];
                                });
}

Var reshape(Var a, Shape shape) {
  if (element_count(shape) != a.size())
    shape_fail("reshape", to_string(a.shape()) + " cannot become " + to_string(shape));
  Tensor out(std::move(shape), std::vector<double>(a.value().data().begin(), a.value().data().end()));
  return a.tape()->record("reshape", std::move(out), {a}, [a](const Tensor& g, Gradients& grads) {
    if (Tensor* ga = grads.target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
  });
}

Var row(Var matrix, std::size_t r) {
  require_matrix("row", matrix);
  if (r >= matrix.shape()[0]) shape_fail("row", "index out of range");
  const std::size_t d = matrix.shape()[1];
  Tensor out({d});
  for (std::size_t j = 0; j < d; ++j) out[j] = matrix.value().at(r, j);
  return matrix.tape()->record("row", std::move(out), {matrix},
                               [matrix, r, d](const Tensor& g, Gradients& grads) {
                                 if (Tensor* gm = grads.target(matrix))
                                   for (std::size_t j = 0; j < d; ++j) gm->at(r, j) += g[j];
                               });
}

Var gather_rows(Var matrix, std::span<const std::size_t> indices) {
  require_matrix("gather_rows", matrix);
  if (indices.empty()) shape_fail("gather_rows", "no indices");
  const std::size_t n = matrix.shape()[0], d = matrix.shape()[1];
  Tensor out({indices.size(), d});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= n) shape_fail("gather_rows", "index out of range");
    for (std::size_t j = 0; j < d; ++j) out.at(k, j) = matrix.value().at(indices[k], j);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return matrix.tape()->record("gather_rows", std::move(out), {matrix},
                               [matrix, idx, d](const Tensor& g, Gradients& grads) {
                                 if (Tensor* gm = grads.target(matrix))
                                   for (std::size_t k = 0; k < idx.size(); ++k)
                                     for (std::size_t j = 0; j < d; ++j)
                                       gm->at(idx[k], j) += g.at(k, j);
                               });
}

Var slice(Var vec, std::size_t begin, std::size_t length) {
  require_vector("slice", vec);
  if (length == 0 || begin + length > vec.size()) shape_fail("slice", "range out of bounds");
  std::vector<double> data(vec.value().data().begin() + begin,
                           vec.value().data().begin() + begin + length);
  return vec.tape()->record("slice", Tensor::vector(std::move(data)), {vec},
                            [vec, begin, length](const Tensor& g, Gradients& grads) {
                              if (Tensor* gv = grads.target(vec))
                                for (std::size_t i = 0; i < length; ++i) (*gv)[begin + i] += g[i];
                            });
}

Var column_block(Var matrix, std::size_t begin, std::size_t length) {
  require_matrix("column_block", matrix);
  const std::size_t rows = matrix.shape()[0], cols = matrix.shape()[1];
  if (length == 0 || begin + length > cols) shape_fail("column_block", "range out of bounds");
  Tensor out({rows, length});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < length; ++c) out.at(r, c) = matrix.value().at(r, begin + c);
  return matrix.tape()->record("column_block", std::move(out), {matrix},
                               [matrix, begin, length, rows](const Tensor& g, Gradients& grads) {
                                 if (Tensor* gm = grads.target(matrix))
                                   for (std::size_t r = 0; r < rows; ++r)
                                     for (std::size_t c = 0; c < length; ++c)
                                       gm->at(r, begin + c) += g.at(r, c);
                               });
}

Var element(Var vec, std::size_t index) {
  if (index >= vec.size()) shape_fail("element", "index out of range");
  return vec.tape()->record("element", Tensor::scalar(vec.value()[index]), {vec},
                            [vec, index](const Tensor& g, Gradients& grads) {
                              if (Tensor* gv = grads.target(vec)) (*gv)[index] += g[0];
                            });
}

Var pick(Var matrix, std::span<const std::size_t> indices) {
  require_matrix("pick", matrix);
  const std::size_t rows = matrix.shape()[0], cols = matrix.shape()[1];
  if (indices.size() != rows) shape_fail("pick", "one index per row required");
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    if (indices[r] >= cols) shape_fail("pick", "index out of range");
    out[r] = matrix.value().at(r, indices[r]);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return matrix.tape()->record("pick", std::move(out), {matrix},
                               [matrix, idx](const Tensor& g, Gradients& grads) {
                                 if (Tensor* gm = grads.target(matrix))
                                   for (std::size_t r = 0; r < idx.size(); ++r)
                                     gm->at(r, idx[r]) += g[r];
                               });
}

// ---- reductions -----------------------------------------------------------------

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape()->record("sum", Tensor::scalar(s), {a}, [a](const Tensor& g, Gradients& grads) {
    if (Tensor* ga = grads.target(a))
      for (auto& v : ga->data()) v += g[0];
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.size());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape()->record("mean", Tensor::scalar(s / n), {a},
                          [a, n](const Tensor& g, Gradients& grads) {
                            if (Tensor* ga = grads.target(a))
                              for (auto& v : ga->data()) v += g[0] / n;
                          });
}

Var softmax(Var a) {
  const auto& x = a.value();
  if (x.rank() != 1 && x.rank() != 2) shape_fail("softmax", "expected a vector or a matrix");
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * cols;
    double* yr = out.data().data() + r * cols;
    const double mx = *std::max_element(xr, xr + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (yr[c] = std::exp(xr[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= z;
  }
  Tensor y = out;
  return a.tape()->record("softmax", std::move(out), {a},
                          [a, y = std::move(y), rows, cols](const Tensor& g, Gradients& grads) {
                            Tensor* ga = grads.target(a);
                            if (!ga) return;
                            for (std::size_t r = 0; r < rows; ++r) {
                              const std::size_t o = r * cols;
                              double dot = 0.0;
                              for (std::size_t c = 0; c < cols; ++c) dot += g[o + c] * y[o + c];
                              for (std::size_t c = 0; c < cols; ++c)
                                (*ga)[o + c] += y[o + c] * (g[o + c] - dot);
                            }
                          });
}

// ---- distances ------------------------------------------------------------------

Var pairwise_sqdist(Var x, Var y) {
  require_matrix("pairwise_sqdist", x);
  require_matrix("pairwise_sqdist", y);
  const std::size_t n = x.shape()[0], m = y.shape()[0], d = x.shape()[1];
  if (y.shape()[1] != d) shape_fail("pairwise_sqdist", "feature dimensions disagree");
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x.value().at(i, k) - y.value().at(j, k);
        acc += diff * diff;
      }
      out.at(i, j) = acc;
    }
  return x.tape()->record("pairwise_sqdist", std::move(out), {x, y},
                          [x, y, n, m, d](const Tensor& g, Gradients& grads) {
                            Tensor* gx = grads.target(x);
                            Tensor* gy = grads.target(y);
                            for (std::size_t i = 0; i < n; ++i)
                              for (std::size_t j = 0; j < m; ++j) {
                                const double w = 2.0 * g.at(i, j);
                                if (w == 0.0) continue;
                                for (std::size_t k = 0; k < d; ++k) {
                                  const double diff = x.value().at(i, k) - y.value().at(j, k);
                                  if (gx) gx->at(i, k) += w * diff;
                                  if (gy) gy->at(j, k) -= w * diff;
                                }
                              }
                          });
}

Var upper_triangle(Var square) {
  require_matrix("upper_triangle", square);
  const std::size_t n = square.shape()[0];
  if (square.shape()[1] != n) shape_fail("upper_triangle", "matrix is not square");
  if (n < 2) shape_fail("upper_triangle", "needs at least two rows");
  std::vector<double> data;
  data.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) data.push_back(square.value().at(i, j));
  return square.tape()->record("upper_triangle", Tensor::vector(std::move(data)), {square},
                               [square, n](const Tensor& g, Gradients& grads) {
                                 Tensor* gs = grads.target(square);
                                 if (!gs) return;
                                 std::size_t k = 0;
                                 for (std::size_t i = 0; i < n; ++i)
                                   for (std::size_t j = i + 1; j < n; ++j) gs->at(i, j) += g[k++];
                               });
}

Var median(Var vec) {
  require_vector("median", vec);
  const std::size_t n = vec.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& v = vec.value();
  std::stable_sort(order.begin(), order.end(),
                   [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<std::size_t> picked;
  if (n % 2 == 1) picked = {order[n / 2]};
  else picked = {order[n / 2 - 1], order[n / 2]};
  double value = 0.0;
  for (auto i : picked) value += v[i];
  value /= static_cast<double>(picked.size());
  return vec.tape()->record("median", Tensor::scalar(value), {vec},
                            [vec, picked](const Tensor& g, Gradients& grads) {
                              if (Tensor* gv = grads.target(vec))
                                for (auto i : picked)
                                  (*gv)[i] += g[0] / static_cast<double>(picked.size());
                            });
}

}  // namespace tsgcl::ad
