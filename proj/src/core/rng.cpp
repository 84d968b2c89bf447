#include "ufda/core/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "ufda/core/error.hpp"

namespace ufda {

Rng Rng::derive(uint64_t seed, std::initializer_list<uint64_t> tags) {
  std::vector<uint32_t> words;
  words.push_back(static_cast<uint32_t>(seed));
  words.push_back(static_cast<uint32_t>(seed >> 32));
  for (auto t : tags) {
    words.push_back(static_cast<uint32_t>(t));
    words.push_back(static_cast<uint32_t>(t >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  Rng rng;
  rng.engine_.seed(seq);
  return rng;
}

double Rng::uniform() {
  // 53 random mantissa bits.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (hi < lo) throw InputError("uniform_int: empty range");
  const auto span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(engine_());
  // Rejection sampling keeps the draw unbiased.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return lo + static_cast<int64_t>(x % span);
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::deserialize(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (!is) throw FormatError("corrupt rng state");
}

}  // namespace ufda
