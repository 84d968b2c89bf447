#include "ufda/liveaug/memory_bank.hpp"

#include <cmath>

#include "ufda/core/error.hpp"

namespace ufda::liveaug {

MemoryBank::MemoryBank(size_t capacity, double delta) : capacity_(capacity), delta_(delta) {
  if (capacity == 0) throw InputError("memory bank capacity must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw InputError("memory bank delta must lie in (0, 1]");
}

double MemoryBank::gate_value(std::span<const double> candidate) const {
  if (entries_.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& e : entries_) {
    double dot = 0.0;
    for (size_t j = 0; j < candidate.size(); ++j) dot += candidate[j] * e.value[j];
    acc += std::fabs(dot);
  }
  return acc / static_cast<double>(entries_.size());
}

bool MemoryBank::try_insert(std::span<const double> candidate) {
  double ss = 0.0;
  for (double v : candidate) ss += v * v;
  if (!(std::fabs(std::sqrt(ss) - 1.0) <= 1e-6)) throw InputError("memory bank candidates must be unit-norm");
  if (!entries_.empty() && candidate.size() != entries_.front().value.size()) {
    throw DimensionError("memory bank candidate dimension mismatch");
  }
  const double m = gate_value(candidate);
  if (!entries_.empty() && !(m < delta_)) return false;
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back({std::vector<double>(candidate.begin(), candidate.end()), next_order_++, m});
  return true;
}

Tensor MemoryBank::as_matrix() const {
  if (entries_.empty()) return Tensor();
  const auto dim = static_cast<int64_t>(entries_.front().value.size());
  Tensor out({static_cast<int64_t>(entries_.size()), dim});
  for (size_t i = 0; i < entries_.size(); ++i) {
    std::copy(entries_[i].value.begin(), entries_[i].value.end(), out.row(static_cast<int64_t>(i)).begin());
  }
  return out;
}

void MemoryBank::restore(std::deque<BankEntry> entries, uint64_t next_order) {
  if (entries.size() > capacity_) throw FormatError("memory bank state exceeds capacity");
  for (size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].order <= entries[i - 1].order) throw FormatError("memory bank order is not increasing");
  }
  if (!entries.empty() && entries.back().order >= next_order) throw FormatError("memory bank order counter is stale");
  entries_ = std::move(entries);
  next_order_ = next_order;
}

}  // namespace ufda::liveaug
