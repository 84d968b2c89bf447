#pragma once

#include <string>
#include <vector>

#include "ufda/core/autograd.hpp"
#include "ufda/core/rng.hpp"

namespace ufda::nets {

struct NamedParam {
  std::string name;
  ag::Var var;
};

// A named set of learnable tensors updated together by one optimizer. Once
// frozen a group never reports trainable again and optimizers skip it.
class ParamGroup {
 public:
  explicit ParamGroup(std::string name) : name_(std::move(name)) {}

  ag::Var add(const std::string& param_name, Tensor init);

  const std::string& name() const { return name_; }
  std::vector<NamedParam>& params() { return params_; }
  const std::vector<NamedParam>& params() const { return params_; }
  const ag::Var& find(const std::string& param_name) const;

  void set_trainable(bool on);
  bool trainable() const { return trainable_; }
  void freeze();
  bool frozen() const { return frozen_; }
  void zero_grad();

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);
  bool bitwise_equal(const std::vector<Tensor>& values) const;
  bool all_finite() const;
  int64_t parameter_count() const;

 private:
  std::string name_;
  std::vector<NamedParam> params_;
  bool trainable_ = true;
  bool frozen_ = false;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer for a single ParamGroup. State is plain data so
// it can be checkpointed and compared.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update from the gradients currently accumulated in group.
  // No-op on frozen groups. Throws NumericError if an update goes non-finite.
  void step(ParamGroup& group);

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  int64_t steps() const { return steps_; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void set_steps(int64_t steps) { steps_ = steps; }

 private:
  AdamConfig config_;
  int64_t steps_ = 0;
  std::vector<Tensor> m_, v_;
};

// Weight initializers.
Tensor he_normal(Shape shape, int64_t fan_in, Rng& rng, double gain = 1.0);
Tensor identity_matrix(int64_t n);

}  // namespace ufda::nets
