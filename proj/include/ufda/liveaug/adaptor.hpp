#pragma once

#include <cstdint>

#include "ufda/core/autograd.hpp"
#include "ufda/core/rng.hpp"
#include "ufda/nets/params.hpp"

namespace ufda::liveaug {

// Standard-normal draws feeding the reparameterized scale and bias noise.
struct AdaptorNoise {
  Tensor scale_eps;  // [N, L]
  Tensor bias_eps;   // [N, L]

  static AdaptorNoise draw(int64_t n, int64_t dim, Rng& rng);
  static AdaptorNoise zeros(int64_t n, int64_t dim);
};

struct AdaptResult {
  ag::Var pre_norm;  // s * (l W^T) + b
  ag::Var output;    // pre_norm re-normalized to unit length
};

// s * (l W^T) + b with s = 1 + scale_std * eps1, b = bias_std * eps2; scale_std
// and bias_std are [L] and broadcast over the batch.
ag::Var affine_noise(const ag::Var& l, const ag::Var& weight, const ag::Var& scale_std, const ag::Var& bias_std,
                     const AdaptorNoise& noise);

// phi: the OOD liveness feature adaptor. The linear map starts at identity;
// the noise stds are softplus of unconstrained parameters so they stay >= 0.
class Adaptor {
 public:
  Adaptor(int64_t latent_dim, double init_noise_std);

  AdaptResult operator()(const ag::Var& l, const AdaptorNoise& noise) const;
  AdaptResult operator()(const ag::Var& l, Rng& rng) const;

  ag::Var scale_std() const;
  ag::Var bias_std() const;
  const ag::Var& weight() const { return weight_; }

  nets::ParamGroup& params() { return group_; }
  const nets::ParamGroup& params() const { return group_; }
  int64_t latent_dim() const { return dim_; }

 private:
  int64_t dim_;
  nets::ParamGroup group_{"phi"};
  ag::Var weight_, raw_scale_std_, raw_bias_std_;
};

struct MaskedFeature {
  ag::Var output;  // masked then re-normalized
  Tensor mask;     // [N, L], 1 = kept
};

// Zeroes floor(ratio * L) uniformly chosen coordinates per row, then
// re-normalizes. Raises DegenerateError when a row is left all-zero.
MaskedFeature mask_feature(const ag::Var& l_tilde, double ratio, Rng& rng);

}  // namespace ufda::liveaug
