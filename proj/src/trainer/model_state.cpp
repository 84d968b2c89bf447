#include "ufda/trainer/model_state.hpp"

#include <algorithm>

#include "ufda/core/error.hpp"

namespace ufda::trainer {

double TrainConfig::lr(const std::string& group) const {
  auto it = learning_rates.find(group);
  return it == learning_rates.end() ? default_lr : it->second;
}

void TrainConfig::validate() const {
  if (epochs <= 0) throw InputError("train: epochs must be positive");
  if (warmup_epochs < 0 || warmup_epochs >= epochs) throw InputError("train: warmup_epochs must be in [0, epochs)");
  if (batch_size < 2) throw InputError("train: batch_size must be at least 2");
  if (!(mask_ratio >= 0 && mask_ratio <= 0.9)) throw InputError("train: mask_ratio must be in [0, 0.9]");
  if (!(feature_mask_ratio >= 0 && feature_mask_ratio <= 0.9)) {
    throw InputError("train: feature_mask_ratio must be in [0, 0.9]");
  }
  if (!(default_lr >= 0)) throw InputError("train: learning rates must be non-negative");
  for (const auto& [name, rate] : learning_rates) {
    if (std::find(group_names().begin(), group_names().end(), name) == group_names().end()) {
      throw InputError("train: unknown parameter group '" + name + "' in learning_rates");
    }
    if (!(rate >= 0)) throw InputError("train: learning rates must be non-negative");
  }
  if (!(bank_delta > 0 && bank_delta <= 1)) throw InputError("train: bank_delta must be in (0, 1]");
  if (bank_capacity <= 0) throw InputError("train: bank_capacity must be positive");
  if (!(adaptor_init_std > 0)) throw InputError("train: adaptor_init_std must be positive");
  if (dims.feature_dim <= 0 || dims.latent_dim <= 1 || dims.hidden_dim <= 0) throw InputError("train: bad dims");
}

namespace {

Rng init_rng(const TrainConfig& c) { return Rng::derive(c.seed, {0x1217u}); }

}  // namespace

// Components draw their initial weights from one stream in declaration order.
ModelState::ModelState(const TrainConfig& cfg)
    : config((cfg.validate(), cfg)),
      nets([&]() -> nets::Networks {
        Rng rng = init_rng(cfg);
        return nets::Networks(cfg.dims, rng);
      }()),
      adaptor(cfg.dims.latent_dim, cfg.adaptor_init_std),
      generator([&]() {
        Rng rng = Rng::derive(cfg.seed, {0x1218u});
        return domainaug::ConditionGenerator(cfg.dims.latent_dim, cfg.gin, rng);
      }()),
      gin(cfg.dims.latent_dim, cfg.gin),
      bank(static_cast<size_t>(cfg.bank_capacity), cfg.bank_delta) {
  groups_ = {{"E", &nets.encoder.params()},
             {"E_l", &nets.live_extractor.params()},
             {"E_d", &nets.domain_extractor.params()},
             {"D", &nets.reconstructor.params()},
             {"phi", &adaptor.params()},
             {"G", &generator.params()},
             {"E_GIN", &gin.params()},
             {"C_l", &nets.live_head.params()},
             {"C_d", &nets.domain_head.params()}};
  for (const auto& name : group_names()) {
    optimizers_.emplace(name, nets::Adam(nets::AdamConfig{config.lr(name)}));
  }
  set_trainable({});
}

nets::ParamGroup& ModelState::group(const std::string& name) {
  auto it = groups_.find(name);
  if (it == groups_.end()) throw InputError("unknown parameter group " + name);
  return *it->second;
}

const nets::ParamGroup& ModelState::group(const std::string& name) const {
  auto it = groups_.find(name);
  if (it == groups_.end()) throw InputError("unknown parameter group " + name);
  return *it->second;
}

void ModelState::set_trainable(const std::vector<std::string>& names) {
  for (auto& [name, g] : groups_) {
    g->set_trainable(std::find(names.begin(), names.end(), name) != names.end());
  }
}

void ModelState::zero_grad() {
  for (auto& [name, g] : groups_) g->zero_grad();
}

void ModelState::step(const std::vector<std::string>& names) {
  for (const auto& name : names) optimizers_.at(name).step(group(name));
  ++global_step;
}

std::map<std::string, std::vector<Tensor>> ModelState::snapshot() const {
  std::map<std::string, std::vector<Tensor>> out;
  for (const auto& [name, g] : groups_) out[name] = g->snapshot();
  return out;
}

bool ModelState::all_finite() const {
  return std::all_of(groups_.begin(), groups_.end(), [](const auto& kv) { return kv.second->all_finite(); });
}

}  // namespace ufda::trainer
