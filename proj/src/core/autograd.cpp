#include "ufda/core/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ufda/core/error.hpp"

namespace ufda::ag {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

MapMat as_mat(Tensor& t, int64_t rows, int64_t cols) { return MapMat(t.data(), rows, cols); }
ConstMapMat as_mat(const Tensor& t, int64_t rows, int64_t cols) { return ConstMapMat(t.data(), rows, cols); }

// Builds the result node. The closure is only kept when some parent needs a
// gradient.
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Var(std::move(node));
}

// Gradient buffer of parent i, or nullptr when it does not require one.
Tensor* pgrad(Node& self, size_t i) {
  auto& p = self.parents[i];
  return (p && p->requires_grad) ? &p->grad_buffer() : nullptr;
}

void require_rank(const Var& x, int64_t rank, const char* op) {
  if (x.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(x.shape()));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

template <class F, class G>
Var unary(const Var& x, F forward, G derivative) {
  Tensor out(x.shape());
  const auto& xv = x.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = forward(xv[i]);
  return make_node(std::move(out), {x}, [derivative](Node& self) {
    Tensor* gx = pgrad(self, 0);
    if (!gx) return;
    const auto& xv = self.parents[0]->value;
    for (int64_t i = 0; i < xv.numel(); ++i) (*gx)[i] += self.grad[i] * derivative(xv[i], self.value[i]);
  });
}

}  // namespace

Tensor& Node::grad_buffer() {
  if (!has_grad) {
    grad = Tensor(value.shape());
    has_grad = true;
  }
  return grad;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Tensor Var::grad() const {
  if (node_->has_grad) return node_->grad;
  return Tensor(node_->value.shape());
}

void Var::zero_grad() {
  node_->grad = Tensor();
  node_->has_grad = false;
}

void backward(const Var& loss) {
  if (loss.value().numel() != 1) throw DimensionError("backward: loss must be a single element");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->has_grad) n->backward_fn(*n);
  }
}

Var detach(const Var& x) { return Var::constant(x.value()); }

Var linear(const Var& x, const Var& weight, const Var& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const int64_t n = x.shape()[0], in = x.shape()[1], out = weight.shape()[0];
  if (weight.shape()[1] != in) {
    throw DimensionError("linear: input width " + std::to_string(in) + " vs weight " + shape_str(weight.shape()));
  }
  if (bias.defined() && bias.value().numel() != out) throw DimensionError("linear: bias size mismatch");

  Tensor y({n, out});
  auto Y = as_mat(y, n, out);
  Y.noalias() = as_mat(x.value(), n, in) * as_mat(weight.value(), out, in).transpose();
  if (bias.defined()) {
    Eigen::Map<const Eigen::RowVectorXd> b(bias.value().data(), out);
    Y.rowwise() += b;
  }
  std::vector<Var> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  return make_node(std::move(y), std::move(parents), [n, in, out](Node& self) {
    auto G = as_mat(self.grad, n, out);
    if (Tensor* gx = pgrad(self, 0)) {
      as_mat(*gx, n, in).noalias() += G * as_mat(self.parents[1]->value, out, in);
    }
    if (Tensor* gw = pgrad(self, 1)) {
      as_mat(*gw, out, in).noalias() += G.transpose() * as_mat(self.parents[0]->value, n, in);
    }
    if (self.parents.size() > 2) {
      if (Tensor* gb = pgrad(self, 2)) {
        Eigen::Map<Eigen::RowVectorXd>(gb->data(), out) += G.colwise().sum();
      }
    }
  });
}

namespace {

struct ConvGeom {
  int64_t n, c, h, w, o, k, stride, pad, ho, wo;
  int64_t patch() const { return c * k * k; }
  int64_t pixels() const { return ho * wo; }
};

void im2col(const double* img, const ConvGeom& g, double* cols) {
  for (int64_t ci = 0; ci < g.c; ++ci) {
    for (int64_t ky = 0; ky < g.k; ++ky) {
      for (int64_t kx = 0; kx < g.k; ++kx) {
        double* dst = cols + ((ci * g.k + ky) * g.k + kx) * g.pixels();
        for (int64_t oy = 0; oy < g.ho; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst + oy * g.wo, dst + (oy + 1) * g.wo, 0.0);
            continue;
          }
          const double* src = img + (ci * g.h + iy) * g.w;
          for (int64_t ox = 0; ox < g.wo; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kx;
            dst[oy * g.wo + ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeom& g, double* img) {
  for (int64_t ci = 0; ci < g.c; ++ci) {
    for (int64_t ky = 0; ky < g.k; ++ky) {
      for (int64_t kx = 0; kx < g.k; ++kx) {
        const double* src = cols + ((ci * g.k + ky) * g.k + kx) * g.pixels();
        for (int64_t oy = 0; oy < g.ho; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          double* dst = img + (ci * g.h + iy) * g.w;
          for (int64_t ox = 0; ox < g.wo; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var central_difference_kernel(const Var& weight, double theta) {
  require_rank(weight, 4, "central_difference_kernel");
  const auto& ws = weight.shape();
  if (ws[2] != ws[3] || ws[2] % 2 == 0) throw DimensionError("central_difference_kernel: odd square kernels only");
  const int64_t taps = ws[2] * ws[3], center = taps / 2, groups = ws[0] * ws[1];
  Tensor out = weight.value();
  for (int64_t g = 0; g < groups; ++g) {
    double sum = 0;
    for (int64_t k = 0; k < taps; ++k) sum += weight.value()[g * taps + k];
    out[g * taps + center] -= theta * sum;
  }
  return make_node(std::move(out), {weight}, [=](Node& self) {
    Tensor* gw = pgrad(self, 0);
    if (!gw) return;
    for (int64_t g = 0; g < groups; ++g) {
      const double gc = self.grad[g * taps + center];
      for (int64_t k = 0; k < taps; ++k) (*gw)[g * taps + k] += self.grad[g * taps + k] - theta * gc;
    }
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d");
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  if (ws[1] != xs[1] || ws[2] != ws[3]) {
    throw DimensionError("conv2d: input " + shape_str(xs) + " incompatible with weight " + shape_str(ws));
  }
  ConvGeom g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], stride, pad, 0, 0};
  g.ho = (g.h + 2 * pad - g.k) / stride + 1;
  g.wo = (g.w + 2 * pad - g.k) / stride + 1;
  if (g.ho <= 0 || g.wo <= 0) throw DimensionError("conv2d: kernel larger than padded input");

  const bool keep_cols = weight.requires_grad();
  auto cols = std::make_shared<std::vector<double>>(static_cast<size_t>(g.n * g.patch() * g.pixels()));
  Tensor y({g.n, g.o, g.ho, g.wo});
  ConstMapMat W(weight.value().data(), g.o, g.patch());
  for (int64_t i = 0; i < g.n; ++i) {
    double* col = cols->data() + i * g.patch() * g.pixels();
    im2col(x.value().data() + i * g.c * g.h * g.w, g, col);
    MapMat Y(y.data() + i * g.o * g.pixels(), g.o, g.pixels());
    Y.noalias() = W * ConstMapMat(col, g.patch(), g.pixels());
    if (bias.defined()) {
      for (int64_t oc = 0; oc < g.o; ++oc) Y.row(oc).array() += bias.value()[oc];
    }
  }
  if (!keep_cols) cols.reset();

  std::vector<Var> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  return make_node(std::move(y), std::move(parents), [g, cols](Node& self) {
    Tensor* gx = pgrad(self, 0);
    Tensor* gw = pgrad(self, 1);
    Tensor* gb = self.parents.size() > 2 ? pgrad(self, 2) : nullptr;
    ConstMapMat W(self.parents[1]->value.data(), g.o, g.patch());
    std::vector<double> dcol(gx ? static_cast<size_t>(g.patch() * g.pixels()) : 0);
    for (int64_t i = 0; i < g.n; ++i) {
      ConstMapMat G(self.grad.data() + i * g.o * g.pixels(), g.o, g.pixels());
      if (gw) {
        const double* col = cols->data() + i * g.patch() * g.pixels();
        MapMat(gw->data(), g.o, g.patch()).noalias() += G * ConstMapMat(col, g.patch(), g.pixels()).transpose();
      }
      if (gb) {
        for (int64_t oc = 0; oc < g.o; ++oc) (*gb)[oc] += G.row(oc).sum();
      }
      if (gx) {
        MapMat(dcol.data(), g.patch(), g.pixels()).noalias() = W.transpose() * G;
        col2im(dcol.data(), g, gx->data() + i * g.c * g.h * g.w);
      }
    }
  });
}

Var leaky_relu(const Var& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

Var global_avg_pool(const Var& x) {
  require_rank(x, 4, "global_avg_pool");
  const auto& s = x.shape();
  const int64_t n = s[0], c = s[1], hw = s[2] * s[3];
  Tensor y({n, c});
  const double* xv = x.value().data();
  for (int64_t i = 0; i < n * c; ++i) {
    double acc = 0;
    for (int64_t p = 0; p < hw; ++p) acc += xv[i * hw + p];
    y[i] = acc / static_cast<double>(hw);
  }
  return make_node(std::move(y), {x}, [n, c, hw](Node& self) {
    Tensor* gx = pgrad(self, 0);
    if (!gx) return;
    for (int64_t i = 0; i < n * c; ++i) {
      const double g = self.grad[i] / static_cast<double>(hw);
      double* dst = gx->data() + i * hw;
      for (int64_t p = 0; p < hw; ++p) dst[p] += g;
    }
  });
}

Var l2_normalize_rows(const Var& x) {
  require_rank(x, 2, "l2_normalize_rows");
  const int64_t n = x.shape()[0], d = x.shape()[1];
  Tensor y({n, d});
  auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(n));
  for (int64_t r = 0; r < n; ++r) {
    double ss = 0;
    for (int64_t j = 0; j < d; ++j) ss += x.value().at(r, j) * x.value().at(r, j);
    const double norm = std::sqrt(ss);
    // NaN/inf rows pass through; the caller's loss check reports them with context.
    if (std::isfinite(norm) && !(norm > 1e-12)) {
      throw DegenerateError("l2 normalization of a zero-norm row (undefined cosine)");
    }
    (*norms)[static_cast<size_t>(r)] = norm;
    for (int64_t j = 0; j < d; ++j) y.at(r, j) = x.value().at(r, j) / norm;
  }
  return make_node(std::move(y), {x}, [n, d, norms](Node& self) {
    Tensor* gx = pgrad(self, 0);
    if (!gx) return;
    for (int64_t r = 0; r < n; ++r) {
      double dot = 0;
      for (int64_t j = 0; j < d; ++j) dot += self.value.at(r, j) * self.grad.at(r, j);
      const double inv = 1.0 / (*norms)[static_cast<size_t>(r)];
      for (int64_t j = 0; j < d; ++j) gx->at(r, j) += (self.grad.at(r, j) - self.value.at(r, j) * dot) * inv;
    }
  });
}

Var row_dot(const Var& a, const Var& b) {
  require_rank(a, 2, "row_dot");
  require_same_shape(a, b, "row_dot");
  const int64_t n = a.shape()[0], d = a.shape()[1];
  Tensor y({n, 1});
  for (int64_t r = 0; r < n; ++r) {
    double acc = 0;
    for (int64_t j = 0; j < d; ++j) acc += a.value().at(r, j) * b.value().at(r, j);
    y[r] = acc;
  }
  return make_node(std::move(y), {a, b}, [n, d](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (Tensor* ga = pgrad(self, 0)) {
      for (int64_t r = 0; r < n; ++r)
        for (int64_t j = 0; j < d; ++j) ga->at(r, j) += self.grad[r] * bv.at(r, j);
    }
    if (Tensor* gb = pgrad(self, 1)) {
      for (int64_t r = 0; r < n; ++r)
        for (int64_t j = 0; j < d; ++j) gb->at(r, j) += self.grad[r] * av.at(r, j);
    }
  });
}

Var logsumexp_rows(const Var& x) {
  require_rank(x, 2, "logsumexp_rows");
  const int64_t n = x.shape()[0], d = x.shape()[1];
  if (d == 0) throw DimensionError("logsumexp_rows: empty rows");
  Tensor y({n, 1});
  for (int64_t r = 0; r < n; ++r) {
    auto row = x.value().row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double acc = 0;
    for (double v : row) acc += std::exp(v - m);
    y[r] = m + std::log(acc);
  }
  return make_node(std::move(y), {x}, [n, d](Node& self) {
    Tensor* gx = pgrad(self, 0);
    if (!gx) return;
    const auto& xv = self.parents[0]->value;
    for (int64_t r = 0; r < n; ++r)
      for (int64_t j = 0; j < d; ++j) gx->at(r, j) += self.grad[r] * std::exp(xv.at(r, j) - self.value[r]);
  });
}

Var standardize_rows(const Var& x, double eps) {
  require_rank(x, 2, "standardize_rows");
  const int64_t n = x.shape()[0], d = x.shape()[1];
  Tensor y({n, d});
  auto sigmas = std::make_shared<std::vector<double>>(static_cast<size_t>(n));
  for (int64_t r = 0; r < n; ++r) {
    auto row = x.value().row(r);
    double mu = 0;
    for (double v : row) mu += v;
    mu /= static_cast<double>(d);
    double var = 0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    const double sigma = std::sqrt(var + eps);
    (*sigmas)[static_cast<size_t>(r)] = sigma;
    for (int64_t j = 0; j < d; ++j) y.at(r, j) = (row[static_cast<size_t>(j)] - mu) / sigma;
  }
  return make_node(std::move(y), {x}, [n, d, sigmas](Node& self) {
    Tensor* gx = pgrad(self, 0);
    if (!gx) return;
    const double inv_d = 1.0 / static_cast<double>(d);
    for (int64_t r = 0; r < n; ++r) {
      double gm = 0, gz = 0;
      for (int64_t j = 0; j < d; ++j) {
        gm += self.grad.at(r, j);
        gz += self.grad.at(r, j) * self.value.at(r, j);
      }
      gm *= inv_d;
      gz *= inv_d;
      const double inv_sigma = 1.0 / (*sigmas)[static_cast<size_t>(r)];
      for (int64_t j = 0; j < d; ++j) {
        gx->at(r, j) += inv_sigma * (self.grad.at(r, j) - gm - self.value.at(r, j) * gz);
      }
    }
  });
}

Var column(const Var& x, int64_t j) {
  require_rank(x, 2, "column");
  const int64_t n = x.shape()[0], d = x.shape()[1];
  if (j < 0 || j >= d) throw DimensionError("column index out of range");
  Tensor y({n, 1});
  for (int64_t r = 0; r < n; ++r) y[r] = x.value().at(r, j);
  return make_node(std::move(y), {x}, [n, j](Node& self) {
    Tensor* gx = pgrad(self, 0);
    if (!gx) return;
    for (int64_t r = 0; r < n; ++r) gx->at(r, j) += self.grad[r];
  });
}

Var concat_cols(const Var& a, const Var& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const int64_t n = a.shape()[0], da = a.shape()[1], db = b.shape()[1];
  if (b.shape()[0] != n) throw DimensionError("concat_cols: row count mismatch");
  Tensor y({n, da + db});
  for (int64_t r = 0; r < n; ++r) {
    std::copy_n(a.value().row(r).begin(), da, y.row(r).begin());
    std::copy_n(b.value().row(r).begin(), db, y.row(r).begin() + da);
  }
  return make_node(std::move(y), {a, b}, [n, da, db](Node& self) {
    if (Tensor* ga = pgrad(self, 0))
      for (int64_t r = 0; r < n; ++r)
        for (int64_t j = 0; j < da; ++j) ga->at(r, j) += self.grad.at(r, j);
    if (Tensor* gb = pgrad(self, 1))
      for (int64_t r = 0; r < n; ++r)
        for (int64_t j = 0; j < db; ++j) gb->at(r, j) += self.grad.at(r, da + j);
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  Shape shape = parts[0].shape();
  int64_t rows = 0;
  for (const auto& p : parts) {
    Shape tail(p.shape().begin() + 1, p.shape().end());
    Shape ref(shape.begin() + 1, shape.end());
    if (tail != ref) throw DimensionError("concat_rows: trailing shape mismatch");
    rows += p.shape()[0];
  }
  shape[0] = rows;
  Tensor y(shape);
  std::vector<int64_t> offsets;
  int64_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    std::copy(p.value().storage().begin(), p.value().storage().end(), y.storage().begin() + off);
    off += p.value().numel();
  }
  return make_node(std::move(y), parts, [offsets](Node& self) {
    for (size_t i = 0; i < self.parents.size(); ++i) {
      Tensor* g = pgrad(self, i);
      if (!g) continue;
      for (int64_t k = 0; k < g->numel(); ++k) (*g)[k] += self.grad[offsets[i] + k];
    }
  });
}

Var slice_rows(const Var& x, int64_t begin, int64_t end) {
  const auto& s = x.shape();
  if (s.empty() || begin < 0 || end > s[0] || begin > end) throw DimensionError("slice_rows: bad range");
  const int64_t stride = x.value().numel() / std::max<int64_t>(s[0], 1);
  Shape shape = s;
  shape[0] = end - begin;
  Tensor y(shape);
  std::copy_n(x.value().data() + begin * stride, (end - begin) * stride, y.data());
  return make_node(std::move(y), {x}, [begin, stride](Node& self) {
    Tensor* g = pgrad(self, 0);
    if (!g) return;
    for (int64_t k = 0; k < self.grad.numel(); ++k) (*g)[begin * stride + k] += self.grad[k];
  });
}

Var broadcast_rows(const Var& v, int64_t n) {
  const int64_t d = v.value().numel();
  const bool ok = v.value().rank() == 1 || (v.value().rank() == 2 && v.shape()[0] == 1);
  if (!ok) throw DimensionError("broadcast_rows: expected [D] or [1, D], got " + shape_str(v.shape()));
  Tensor y({n, d});
  for (int64_t r = 0; r < n; ++r) std::copy_n(v.value().data(), d, y.data() + r * d);
  return make_node(std::move(y), {v}, [n, d](Node& self) {
    Tensor* g = pgrad(self, 0);
    if (!g) return;
    for (int64_t r = 0; r < n; ++r)
      for (int64_t j = 0; j < d; ++j) (*g)[j] += self.grad[r * d + j];
  });
}

Var broadcast_cols(const Var& v, int64_t d) {
  if (v.value().rank() != 2 || v.shape()[1] != 1) throw DimensionError("broadcast_cols: expected [N, 1]");
  const int64_t n = v.shape()[0];
  Tensor y({n, d});
  for (int64_t r = 0; r < n; ++r)
    for (int64_t j = 0; j < d; ++j) y.at(r, j) = v.value()[r];
  return make_node(std::move(y), {v}, [n, d](Node& self) {
    Tensor* g = pgrad(self, 0);
    if (!g) return;
    for (int64_t r = 0; r < n; ++r)
      for (int64_t j = 0; j < d; ++j) (*g)[r] += self.grad.at(r, j);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor y(a.shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] + b.value()[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    for (size_t p = 0; p < 2; ++p)
      if (Tensor* g = pgrad(self, p))
        for (int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i];
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor y(a.shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] - b.value()[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    if (Tensor* g = pgrad(self, 0))
      for (int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i];
    if (Tensor* g = pgrad(self, 1))
      for (int64_t i = 0; i < g->numel(); ++i) (*g)[i] -= self.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor y(a.shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] * b.value()[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (Tensor* g = pgrad(self, 0))
      for (int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i] * bv[i];
    if (Tensor* g = pgrad(self, 1))
      for (int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

Var scale(const Var& x, double c) {
  return unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Var add_scalar(const Var& x, double c) {
  return unary(x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var log(const Var& x) {
  for (double v : x.value().values()) {
    if (v <= 0) throw DegenerateError("log of a non-positive value");  // NaN passes through
  }
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var exp(const Var& x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var abs(const Var& x) {
  return unary(
      x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Var square(const Var& x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var softplus(const Var& x) {
  return unary(
      x, [](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Var sigmoid_clamped(const Var& x, double eps) {
  return unary(
      x,
      [eps](double v) {
        const double p = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        return std::clamp(p, eps, 1.0 - eps);
      },
      [eps](double, double p) { return (p <= eps || p >= 1.0 - eps) ? 0.0 : p * (1.0 - p); });
}

Var sum(const Var& x) {
  double acc = 0;
  for (double v : x.value().values()) acc += v;
  return make_node(Tensor::scalar(acc), {x}, [](Node& self) {
    Tensor* g = pgrad(self, 0);
    if (!g) return;
    for (int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[0];
  });
}

Var mean(const Var& x) {
  const auto n = x.value().numel();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

}  // namespace ufda::ag
