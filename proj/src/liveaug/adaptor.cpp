#include "ufda/liveaug/adaptor.hpp"

#include <cmath>
#include <numeric>

#include "ufda/core/error.hpp"

namespace ufda::liveaug {

namespace {

double inverse_softplus(double y) { return std::log(std::expm1(y)); }

}  // namespace

AdaptorNoise AdaptorNoise::draw(int64_t n, int64_t dim, Rng& rng) {
  AdaptorNoise noise{Tensor({n, dim}), Tensor({n, dim})};
  for (auto& v : noise.scale_eps.values()) v = rng.normal();
  for (auto& v : noise.bias_eps.values()) v = rng.normal();
  return noise;
}

AdaptorNoise AdaptorNoise::zeros(int64_t n, int64_t dim) { return {Tensor({n, dim}), Tensor({n, dim})}; }

ag::Var affine_noise(const ag::Var& l, const ag::Var& weight, const ag::Var& scale_std, const ag::Var& bias_std,
                     const AdaptorNoise& noise) {
  if (l.value().rank() != 2) throw DimensionError("adapt: expected [N, L] input, got " + shape_str(l.shape()));
  const int64_t n = l.shape()[0], dim = l.shape()[1];
  if (weight.shape() != Shape{dim, dim} || scale_std.value().numel() != dim || bias_std.value().numel() != dim ||
      noise.scale_eps.shape() != Shape{n, dim} || noise.bias_eps.shape() != Shape{n, dim}) {
    throw DimensionError("adapt: parameter or noise shape does not match input " + shape_str(l.shape()));
  }
  auto mapped = ag::linear(l, weight, ag::Var());
  auto s = ag::add_scalar(ag::mul(ag::broadcast_rows(scale_std, n), ag::Var::constant(noise.scale_eps)), 1.0);
  auto b = ag::mul(ag::broadcast_rows(bias_std, n), ag::Var::constant(noise.bias_eps));
  return ag::add(ag::mul(s, mapped), b);
}

Adaptor::Adaptor(int64_t latent_dim, double init_noise_std) : dim_(latent_dim) {
  if (!(init_noise_std > 0)) throw InputError("adaptor: initial noise std must be positive");
  weight_ = group_.add("weight", nets::identity_matrix(latent_dim));
  raw_scale_std_ = group_.add("raw_scale_std", Tensor({latent_dim}, inverse_softplus(init_noise_std)));
  raw_bias_std_ = group_.add("raw_bias_std", Tensor({latent_dim}, inverse_softplus(init_noise_std)));
}

ag::Var Adaptor::scale_std() const { return ag::softplus(raw_scale_std_); }
ag::Var Adaptor::bias_std() const { return ag::softplus(raw_bias_std_); }

AdaptResult Adaptor::operator()(const ag::Var& l, const AdaptorNoise& noise) const {
  auto pre = affine_noise(l, weight_, scale_std(), bias_std(), noise);
  return {pre, ag::l2_normalize_rows(pre)};
}

AdaptResult Adaptor::operator()(const ag::Var& l, Rng& rng) const {
  if (l.value().rank() != 2) throw DimensionError("adapt: expected [N, L] input");
  return (*this)(l, AdaptorNoise::draw(l.shape()[0], l.shape()[1], rng));
}

MaskedFeature mask_feature(const ag::Var& l_tilde, double ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio <= 0.9)) throw InputError("mask_feature: ratio must lie in [0, 0.9]");
  if (l_tilde.value().rank() != 2) throw DimensionError("mask_feature: expected [N, L] input");
  const int64_t n = l_tilde.shape()[0], dim = l_tilde.shape()[1];
  const auto drop = static_cast<int64_t>(std::floor(ratio * static_cast<double>(dim)));
  Tensor mask({n, dim}, 1.0);
  std::vector<int64_t> idx(static_cast<size_t>(dim));
  for (int64_t r = 0; r < n; ++r) {
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first `drop` slots are a uniform subset.
    for (int64_t i = 0; i < drop; ++i) {
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(rng.uniform_int(i, dim - 1))]);
      mask.at(r, idx[static_cast<size_t>(i)]) = 0.0;
    }
  }
  auto masked = ag::mul(l_tilde, ag::Var::constant(mask));
  for (int64_t r = 0; r < n; ++r) {
    bool any = false;
    for (double v : masked.value().row(r)) any = any || v != 0.0;
    if (!any) throw DegenerateError("mask_feature: masking left an all-zero feature row");
  }
  return {ag::l2_normalize_rows(masked), std::move(mask)};
}

}  // namespace ufda::liveaug
