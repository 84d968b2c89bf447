#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "ufda/core/tensor.hpp"

namespace ufda::liveaug {

struct BankEntry {
  std::vector<double> value;  // unit-norm, stored detached
  uint64_t order = 0;         // strictly increasing insertion counter
  double gate = 0.0;          // mean |cos| against the bank at insertion time
};

// Fixed-capacity FIFO store of synthesized OOD liveness features. A candidate
// enters only if its mean absolute cosine similarity to the current entries
// is below delta (an empty bank always accepts).
class MemoryBank {
 public:
  MemoryBank(size_t capacity, double delta);

  // Mean |cos(candidate, entry)| over all entries; 0 for an empty bank.
  double gate_value(std::span<const double> candidate) const;
  // Returns whether the candidate was stored. Raises InputError unless the
  // candidate is unit-norm (within 1e-6) and has the bank's dimension.
  bool try_insert(std::span<const double> candidate);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  size_t capacity() const { return capacity_; }
  double delta() const { return delta_; }
  uint64_t next_order() const { return next_order_; }
  const std::deque<BankEntry>& entries() const { return entries_; }
  // [K, L] matrix of the entries in insertion order (empty if the bank is).
  Tensor as_matrix() const;

  // Exact state replacement, used by checkpoint restore.
  void restore(std::deque<BankEntry> entries, uint64_t next_order);

 private:
  size_t capacity_;
  double delta_;
  uint64_t next_order_ = 0;
  std::deque<BankEntry> entries_;
};

}  // namespace ufda::liveaug
