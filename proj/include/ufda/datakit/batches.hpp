#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ufda/core/rng.hpp"
#include "ufda/core/tensor.hpp"
#include "ufda/datakit/records.hpp"

namespace ufda::datakit {

// Foreground and background patches of one record, planar CHW floats.
struct PatchSample {
  std::vector<float> fg;
  std::vector<float> bg;
  Label label = Label::live;
  std::string id;
  std::string domain_tag;
};

class PatchDataset {
 public:
  // Loads and splits every record of `split` (all records when nullopt).
  static PatchDataset load(const Manifest& manifest, std::optional<Split> split, int patch_size = 64);

  size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  int patch_size() const { return patch_size_; }
  const PatchSample& operator[](size_t i) const { return samples_[i]; }
  const std::vector<PatchSample>& samples() const { return samples_; }
  void add(PatchSample sample) { samples_.push_back(std::move(sample)); }
  explicit PatchDataset(int patch_size = 64) : patch_size_(patch_size) {}

  // [n, 3, P, P] tensor of the unmasked foreground patches at idx.
  Tensor foreground(const std::vector<size_t>& idx) const;

 private:
  int patch_size_;
  std::vector<PatchSample> samples_;
};

struct BatchOptions {
  int64_t batch_size = 32;
  double mask_ratio = 0.25;
};

// fg_masked_s/t are two independently masked views of fg; masks hold 1 = keep.
struct PatchBatch {
  Tensor fg;           // [B, 3, P, P]
  Tensor fg_masked_s;  // [B, 3, P, P]
  Tensor fg_masked_t;  // [B, 3, P, P]
  Tensor bg;           // [B, 3, P, P]
  Tensor masks_s;      // [B, P, P]
  Tensor masks_t;      // [B, P, P]
  std::vector<size_t> sample_ids;

  int64_t size() const { return static_cast<int64_t>(sample_ids.size()); }
};

// One shuffled pass over a dataset. The last partial batch is dropped. All
// randomness (order and masks) comes from the rng handed in, so a stream
// seeded identically is identical.
class BatchIterator {
 public:
  BatchIterator(const PatchDataset& dataset, BatchOptions options, Rng rng);

  std::optional<PatchBatch> next();
  int64_t batches_per_epoch() const;

 private:
  const PatchDataset* dataset_;
  BatchOptions options_;
  Rng rng_;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
};

}  // namespace ufda::datakit
