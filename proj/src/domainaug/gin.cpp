#include "ufda/domainaug/gin.hpp"

#include <cmath>
#include <numbers>

#include "ufda/core/error.hpp"

namespace ufda::domainaug {

namespace {

const double kAlphaShift = std::log(std::numbers::e - 1.0);

ag::Var expand(const ag::Var& v, int64_t dim) {
  return v.shape()[1] == 1 ? ag::broadcast_cols(v, dim) : v;
}

}  // namespace

ConditionGenerator::ConditionGenerator(int64_t latent_dim, const GinOptions& options, Rng& rng)
    : dim_(latent_dim), options_(options) {
  const int64_t out = options.per_dimension ? 2 * latent_dim : 2;
  hidden_ = nets::Linear::create(group_, "hidden", 2 * options.noise_dim, options.hidden_dim, rng);
  out_ = nets::Linear::create(group_, "out", options.hidden_dim, out, rng, 0.5);
}

GinCondition ConditionGenerator::operator()(int64_t n, Rng& rng) const {
  Tensor na({n, options_.noise_dim}), nb({n, options_.noise_dim});
  for (auto& v : na.values()) v = rng.normal();
  for (auto& v : nb.values()) v = rng.normal();
  return (*this)(std::move(na), std::move(nb));
}

GinCondition ConditionGenerator::operator()(Tensor n_alpha, Tensor n_beta) const {
  if (n_alpha.rank() != 2 || n_alpha.shape() != n_beta.shape() || n_alpha.cols() != options_.noise_dim) {
    throw DimensionError("condition generator: noise must be two [N, k] batches");
  }
  auto noise = ag::concat_cols(ag::Var::constant(n_alpha), ag::Var::constant(n_beta));
  auto raw = out_(ag::leaky_relu(hidden_(noise), 0.1));
  ag::Var alpha_raw, beta;
  if (options_.per_dimension) {
    // Columns [0, L) are alpha~, [L, 2L) are beta.
    Tensor pick_a({dim_, 2 * dim_}), pick_b({dim_, 2 * dim_});
    for (int64_t j = 0; j < dim_; ++j) {
      pick_a.at(j, j) = 1.0;
      pick_b.at(j, dim_ + j) = 1.0;
    }
    alpha_raw = ag::linear(raw, ag::Var::constant(pick_a), ag::Var());
    beta = ag::linear(raw, ag::Var::constant(pick_b), ag::Var());
  } else {
    alpha_raw = ag::column(raw, 0);
    beta = ag::column(raw, 1);
  }
  auto alpha = ag::softplus(ag::add_scalar(alpha_raw, kAlphaShift));
  return {std::move(n_alpha), std::move(n_beta), std::move(alpha), std::move(beta)};
}

GinEncoder::GinEncoder(int64_t latent_dim, const GinOptions& options) : dim_(latent_dim), options_(options) {
  gamma_ = group_.add("gamma", Tensor({latent_dim}, 1.0));
  eta_ = group_.add("eta", Tensor({latent_dim}, 0.0));
}

GinOutput GinEncoder::operator()(const ag::Var& d_fore, const ag::Var& alpha, const ag::Var& beta) const {
  nets::check_feature(d_fore, dim_, "gin domain input");
  const int64_t n = d_fore.shape()[0];
  for (const auto* v : {&alpha, &beta}) {
    const auto& s = v->shape();
    if (s.size() != 2 || s[0] != n || (s[1] != 1 && s[1] != dim_)) {
      throw DimensionError("gin: alpha/beta must be [N, 1] or [N, L], got " + shape_str(s));
    }
  }

  GinOutput out{ag::Var(), ag::Var(), Tensor({n}), Tensor({n})};
  for (int64_t r = 0; r < n; ++r) {
    auto row = d_fore.value().row(r);
    double mu = 0;
    for (double v : row) mu += v;
    mu /= static_cast<double>(dim_);
    double var = 0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= static_cast<double>(dim_);
    if (std::sqrt(var) < 1e-6) throw DegenerateError("gin: constant domain feature has no instance statistics");
    out.mean[r] = mu;
    out.stddev[r] = std::sqrt(var + options_.eps);
  }

  auto z = ag::standardize_rows(d_fore, options_.eps);
  auto styled = ag::add(ag::mul(ag::broadcast_rows(gamma_, n), z), ag::broadcast_rows(eta_, n));
  out.pre_norm = ag::add(ag::mul(expand(alpha, dim_), styled), expand(beta, dim_));
  out.output = ag::l2_normalize_rows(out.pre_norm);
  return out;
}

GinOutput gin_forward(const GinEncoder& encoder, const ConditionGenerator& generator, const ag::Var& d_fore,
                      Rng& rng) {
  if (d_fore.value().rank() != 2) throw DimensionError("gin: expected [N, L] domain features");
  auto cond = generator(d_fore.shape()[0], rng);
  return encoder(d_fore, cond.alpha, cond.beta);
}

}  // namespace ufda::domainaug
