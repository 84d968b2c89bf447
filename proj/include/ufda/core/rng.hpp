#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace ufda {

// Deterministic random stream. Normal draws use Box-Muller without a cached
// second value, so the whole stream state is the engine state and
// serialize()/deserialize() capture it exactly.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  // Independent stream keyed by (seed, tags...). Used for per-epoch and
  // per-stage streams so training is reproducible from any epoch boundary.
  static Rng derive(uint64_t seed, std::initializer_list<uint64_t> tags);

  uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::string serialize() const;
  void deserialize(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ufda
