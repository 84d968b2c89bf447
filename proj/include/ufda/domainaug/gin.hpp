#pragma once

#include <cstdint>

#include "ufda/core/autograd.hpp"
#include "ufda/core/rng.hpp"
#include "ufda/nets/networks.hpp"
#include "ufda/nets/params.hpp"

namespace ufda::domainaug {

struct GinOptions {
  int64_t noise_dim = 8;        // k, size of each of n_alpha and n_beta
  int64_t hidden_dim = 32;      // G hidden width
  bool per_dimension = false;   // (alpha, beta) per feature dimension instead of per sample
  double eps = 1e-6;            // added under the variance
};

// (alpha, beta) and the noise they were generated from.
struct GinCondition {
  Tensor n_alpha;  // [N, k]
  Tensor n_beta;   // [N, k]
  ag::Var alpha;   // [N, 1] (or [N, L] per-dimension), strictly positive
  ag::Var beta;    // same shape as alpha
};

// G: perceptron from concatenated (n_alpha, n_beta) to raw (alpha~, beta);
// alpha = softplus(alpha~ + ln(e - 1)), so alpha(0) = 1.
class ConditionGenerator {
 public:
  ConditionGenerator(int64_t latent_dim, const GinOptions& options, Rng& rng);

  GinCondition operator()(int64_t n, Rng& rng) const;
  GinCondition operator()(Tensor n_alpha, Tensor n_beta) const;

  nets::ParamGroup& params() { return group_; }
  const nets::ParamGroup& params() const { return group_; }
  const GinOptions& options() const { return options_; }

 private:
  int64_t dim_;
  GinOptions options_;
  nets::ParamGroup group_{"G"};
  nets::Linear hidden_, out_;
};

struct GinOutput {
  ag::Var pre_norm;  // alpha * (gamma * z + eta) + beta
  ag::Var output;    // pre_norm re-normalized to unit length
  Tensor mean;       // [N] per-row mu_d
  Tensor stddev;     // [N] per-row sigma_d = sqrt(var + eps)
};

// E_GIN: instance normalization over the vector's elements with a learnable
// elementwise affine (gamma = 1, eta = 0 at init) followed by the sampled
// (alpha, beta) modulation.
class GinEncoder {
 public:
  GinEncoder(int64_t latent_dim, const GinOptions& options);

  // alpha, beta are [N, 1] or [N, L]. Raises DegenerateError when a row of
  // d_fore is (numerically) constant.
  GinOutput operator()(const ag::Var& d_fore, const ag::Var& alpha, const ag::Var& beta) const;

  nets::ParamGroup& params() { return group_; }
  const nets::ParamGroup& params() const { return group_; }

 private:
  int64_t dim_;
  GinOptions options_;
  nets::ParamGroup group_{"E_GIN"};
  ag::Var gamma_, eta_;
};

// d^ = E_GIN(d^f | G(n_alpha, n_beta)) with fresh noise from rng.
GinOutput gin_forward(const GinEncoder& encoder, const ConditionGenerator& generator, const ag::Var& d_fore,
                      Rng& rng);

}  // namespace ufda::domainaug
