#pragma once

#include <map>
#include <string>
#include <vector>

#include "ufda/domainaug/gin.hpp"
#include "ufda/liveaug/adaptor.hpp"
#include "ufda/liveaug/memory_bank.hpp"
#include "ufda/nets/networks.hpp"
#include "ufda/trainer/config.hpp"

namespace ufda::trainer {

// Every learnable component, its optimizer, the memory bank, and the training
// clock. Single writer: only the training loop mutates it. Not copyable,
// because the group registry points into the components.
class ModelState {
 public:
  explicit ModelState(const TrainConfig& config);
  ModelState(const ModelState&) = delete;
  ModelState& operator=(const ModelState&) = delete;

  nets::ParamGroup& group(const std::string& name);
  const nets::ParamGroup& group(const std::string& name) const;
  nets::Adam& optimizer(const std::string& name) { return optimizers_.at(name); }
  const nets::Adam& optimizer(const std::string& name) const { return optimizers_.at(name); }

  // Makes exactly the listed groups trainable (frozen groups never are).
  void set_trainable(const std::vector<std::string>& names);
  void zero_grad();
  // Steps the optimizers of the listed groups.
  void step(const std::vector<std::string>& names);

  std::map<std::string, std::vector<Tensor>> snapshot() const;
  bool all_finite() const;

  TrainConfig config;
  nets::Networks nets;
  liveaug::Adaptor adaptor;               // phi
  domainaug::ConditionGenerator generator;  // G
  domainaug::GinEncoder gin;              // E_GIN
  liveaug::MemoryBank bank;

  int64_t epoch = 0;        // completed epochs
  int64_t global_step = 0;  // optimizer steps across all stages
  bool domain_head_ready = false;
  double domain_head_accuracy = 0.0;
  std::vector<std::string> history;  // one history row per completed epoch

 private:
  std::map<std::string, nets::ParamGroup*> groups_;
  std::map<std::string, nets::Adam> optimizers_;
};

}  // namespace ufda::trainer
