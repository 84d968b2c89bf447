#pragma once

// Minimal reverse-mode automatic differentiation over ufda::Tensor.
//
// A Var is a handle to a graph node. Ops build new nodes that remember their
// parents and a backward closure; backward(loss) walks the graph in reverse
// topological order and accumulates gradients into every node that requires
// them. Nodes whose parents all have requires_grad == false record no
// closure, so frozen sub-networks cost nothing on the backward pass.

#include <functional>
#include <memory>
#include <vector>

#include "ufda/core/tensor.hpp"

namespace ufda::ag {

struct Node {
  Tensor value;
  Tensor grad;
  bool has_grad = false;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  static Var parameter(Tensor value);

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor& value() const { return node_->value; }
  // Direct access for optimizers and checkpoint loading.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  double item() const { return node_->value.item(); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return node_->has_grad; }
  // Zero tensor of the value's shape when no gradient has been accumulated.
  Tensor grad() const;
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Seeds d(loss)/d(loss) = 1 and back-propagates. loss must hold one element.
void backward(const Var& loss);

Var detach(const Var& x);

// Dense layers. x [N, in], weight [out, in], bias [out] (bias may be undefined).
Var linear(const Var& x, const Var& weight, const Var& bias);
// x [N, C, H, W], weight [O, C, k, k], bias [O]; square kernels, zero padding.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);
// Central-difference reparameterization: the center tap of every [k, k]
// slice is reduced by theta times the slice sum. theta = 1 gives zero-sum
// (pure difference) kernels.
Var central_difference_kernel(const Var& weight, double theta);
Var leaky_relu(const Var& x, double slope);
// [N, C, H, W] -> [N, C]
Var global_avg_pool(const Var& x);

// Row-wise ops on [N, D].
Var l2_normalize_rows(const Var& x);
Var row_dot(const Var& a, const Var& b);  // -> [N, 1]
Var logsumexp_rows(const Var& x);         // -> [N, 1]
// (x - mean) / sqrt(var + eps) per row, population variance.
Var standardize_rows(const Var& x, double eps);
Var column(const Var& x, int64_t j);  // -> [N, 1]

Var concat_cols(const Var& a, const Var& b);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& x, int64_t begin, int64_t end);
Var broadcast_rows(const Var& v, int64_t n);  // [D] or [1, D] -> [N, D]
Var broadcast_cols(const Var& v, int64_t d);  // [N, 1] -> [N, D]

// Elementwise, equal shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double c);
Var add_scalar(const Var& x, double c);
Var log(const Var& x);
Var exp(const Var& x);
Var abs(const Var& x);
Var square(const Var& x);
Var softplus(const Var& x);
// Logistic of x clamped to [eps, 1 - eps]; clamped entries pass no gradient.
Var sigmoid_clamped(const Var& x, double eps);

Var sum(const Var& x);
Var mean(const Var& x);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double c, const Var& x) { return scale(x, c); }

}  // namespace ufda::ag
