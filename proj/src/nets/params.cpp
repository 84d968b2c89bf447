#include "ufda/nets/params.hpp"

#include <bit>
#include <cmath>

#include "ufda/core/error.hpp"

namespace ufda::nets {

ag::Var ParamGroup::add(const std::string& param_name, Tensor init) {
  auto var = ag::Var::parameter(std::move(init));
  var.set_requires_grad(trainable_ && !frozen_);
  params_.push_back({param_name, var});
  return var;
}

const ag::Var& ParamGroup::find(const std::string& param_name) const {
  for (const auto& p : params_) {
    if (p.name == param_name) return p.var;
  }
  throw InputError("parameter group " + name_ + " has no parameter " + param_name);
}

void ParamGroup::set_trainable(bool on) {
  trainable_ = on && !frozen_;
  for (auto& p : params_) p.var.set_requires_grad(trainable_);
}

void ParamGroup::freeze() {
  frozen_ = true;
  set_trainable(false);
  zero_grad();
}

void ParamGroup::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

std::vector<Tensor> ParamGroup::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.var.value());
  return out;
}

void ParamGroup::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) throw DimensionError("restore: parameter count mismatch in " + name_);
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != params_[i].var.shape()) {
      throw DimensionError("restore: shape mismatch for " + name_ + "/" + params_[i].name + ": expected " +
                           shape_str(params_[i].var.shape()) + ", got " + shape_str(values[i].shape()));
    }
    params_[i].var.mutable_value() = values[i];
  }
}

bool ParamGroup::bitwise_equal(const std::vector<Tensor>& values) const {
  if (values.size() != params_.size()) return false;
  for (size_t i = 0; i < values.size(); ++i) {
    const auto& a = params_[i].var.value();
    const auto& b = values[i];
    if (a.shape() != b.shape()) return false;
    // Compare representations, not values, so -0.0 vs 0.0 and NaN payloads count.
    for (int64_t k = 0; k < a.numel(); ++k) {
      if (std::bit_cast<uint64_t>(a[k]) != std::bit_cast<uint64_t>(b[k])) return false;
    }
  }
  return true;
}

bool ParamGroup::all_finite() const {
  for (const auto& p : params_) {
    if (!p.var.value().all_finite()) return false;
  }
  return true;
}

int64_t ParamGroup::parameter_count() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.var.value().numel();
  return n;
}

void Adam::step(ParamGroup& group) {
  if (group.frozen()) return;
  auto& params = group.params();
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.var.shape());
      v_.emplace_back(p.var.shape());
    }
  }
  if (m_.size() != params.size()) throw DimensionError("Adam state does not match group " + group.name());

  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& var = params[i].var;
    if (!var.has_grad()) continue;
    const Tensor& g = var.node()->grad;
    Tensor& w = var.mutable_value();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int64_t k = 0; k < w.numel(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double update = config_.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + config_.eps);
      w[k] -= update;
    }
    if (!w.all_finite()) {
      throw NumericError("non-finite parameter after update in " + group.name() + "/" + params[i].name);
    }
  }
}

Tensor he_normal(Shape shape, int64_t fan_in, Rng& rng, double gain) {
  Tensor t(std::move(shape));
  const double std = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : t.values()) v = rng.normal(0.0, std);
  return t;
}

Tensor identity_matrix(int64_t n) {
  Tensor t({n, n});
  for (int64_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

}  // namespace ufda::nets
