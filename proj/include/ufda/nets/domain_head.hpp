#pragma once

#include <cstdint>

#include "ufda/core/tensor.hpp"
#include "ufda/nets/networks.hpp"

namespace ufda::nets {

struct DomainPretrainOptions {
  int64_t epochs = 30;
  int64_t batch_size = 64;
  uint64_t seed = 0;
};

struct DomainPretrainReport {
  double train_accuracy = 0.0;
  double final_loss = 0.0;
  int64_t samples = 0;
};

// Fits C_d by binary cross-entropy on domain features (label 1) against
// liveness features (label 0), then freezes it. Rows of both matrices are
// L-dim features harvested from live data.
DomainPretrainReport pretrain_domain_head(BinaryHead& head, Adam& optimizer, const Tensor& domain_features,
                                          const Tensor& liveness_features, const DomainPretrainOptions& options);

// Fraction of rows classified correctly at p >= 0.5 (domain) / < 0.5 (liveness).
double domain_head_accuracy(const BinaryHead& head, const Tensor& domain_features, const Tensor& liveness_features);

double mean_probability(const BinaryHead& head, const Tensor& features);

}  // namespace ufda::nets
