#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "ufda/domainaug/gin.hpp"
#include "ufda/nets/networks.hpp"
#include "ufda/ufd/losses.hpp"

namespace ufda::trainer {

enum class BankInsertMode { per_batch, per_sample };

// Parameter group names, in the fixed order used for audits and checkpoints.
inline const std::vector<std::string>& group_names() {
  static const std::vector<std::string> names{"E", "E_l", "E_d", "D", "phi", "G", "E_GIN", "C_l", "C_d"};
  return names;
}

struct TrainConfig {
  int64_t epochs = 30;         // T_max, warm-up epochs included
  int64_t warmup_epochs = 5;   // stage-1-only epochs before C_d pretraining
  int64_t batch_size = 32;
  double mask_ratio = 0.25;          // image-space block masking
  double feature_mask_ratio = 0.25;  // l~_M coordinate masking
  // Per group; missing -> default_lr. The encoder runs slower than the heads on
  // top of it, otherwise stage 1 collapses l before stage 4 can use it.
  std::map<std::string, double> learning_rates{{"E", 2e-5}};
  double default_lr = 1e-3;
  double lambda1 = 1.0;
  double lambda2 = 1e-1;
  double bank_delta = 0.5;
  int64_t bank_capacity = 512;
  BankInsertMode bank_insert = BankInsertMode::per_batch;
  ufd::RecNorm rec_norm = ufd::RecNorm::l1;
  ufd::DisMode dis_mode = ufd::DisMode::absolute_cosine;
  double adaptor_init_std = 0.1;
  int64_t domain_head_epochs = 30;
  bool enable_liveaug = true;    // stage 2
  bool enable_domainaug = true;  // stage 3 and the d^ term of stage 4
  nets::NetDims dims;
  domainaug::GinOptions gin;
  uint64_t seed = 0;
  std::filesystem::path output_dir;
  bool write_checkpoints = true;

  double lr(const std::string& group) const;
  void validate() const;
};

}  // namespace ufda::trainer
