#include "ufda/nets/networks.hpp"

#include <cmath>

#include "ufda/core/error.hpp"

namespace ufda::nets {

namespace {
constexpr double kLeak = 0.1;
}

void check_feature(const ag::Var& v, int64_t dim, const char* what) {
  if (v.value().rank() != 2 || v.shape()[1] != dim) {
    throw DimensionError(std::string(what) + ": expected [N, " + std::to_string(dim) + "], got " +
                         shape_str(v.shape()));
  }
}

Linear Linear::create(ParamGroup& group, const std::string& prefix, int64_t in, int64_t out, Rng& rng,
                      double gain) {
  Linear l;
  l.weight = group.add(prefix + ".weight", he_normal({out, in}, in, rng, gain));
  l.bias = group.add(prefix + ".bias", Tensor({out}));
  return l;
}

Conv2d Conv2d::create(ParamGroup& group, const std::string& prefix, int64_t in, int64_t out, int64_t kernel,
                      int stride, int pad, Rng& rng) {
  Conv2d c;
  c.weight = group.add(prefix + ".weight", he_normal({out, in, kernel, kernel}, in * kernel * kernel, rng));
  c.bias = group.add(prefix + ".bias", Tensor({out}));
  c.stride = stride;
  c.pad = pad;
  return c;
}

Encoder::Encoder(const NetDims& dims, Rng& rng) : dims_(dims) {
  int64_t in = dims.channels;
  int64_t width = dims.encoder_width;
  for (int b = 0; b < 4; ++b) {
    blocks_.push_back(Conv2d::create(group_, "block" + std::to_string(b), in, width, 3, 2, 1, rng));
    if (b == 0) blocks_.back().cdc_theta = dims.stem_cdc_theta;
    in = width;
    width *= 2;
  }
  proj_ = Linear::create(group_, "proj", in, dims.feature_dim, rng, 0.5);
}

ag::Var Encoder::operator()(const ag::Var& images) const {
  const auto& s = images.shape();
  if (s.size() != 4 || s[1] != dims_.channels || s[2] != dims_.patch_size || s[3] != dims_.patch_size) {
    throw DimensionError("encoder: expected [N, " + std::to_string(dims_.channels) + ", " +
                         std::to_string(dims_.patch_size) + ", " + std::to_string(dims_.patch_size) + "], got " +
                         shape_str(s));
  }
  ag::Var h = images;
  for (const auto& block : blocks_) h = ag::leaky_relu(block(h), kLeak);
  auto f = proj_(ag::global_avg_pool(h));
  return f;
}

FeatureExtractor::FeatureExtractor(std::string name, const NetDims& dims, Rng& rng)
    : dims_(dims), group_(std::move(name)) {
  hidden_ = Linear::create(group_, "hidden", dims.feature_dim, dims.hidden_dim, rng);
  out_ = Linear::create(group_, "out", dims.hidden_dim, dims.latent_dim, rng, 0.5);
}

ag::Var FeatureExtractor::operator()(const ag::Var& general) const {
  check_feature(general, dims_.feature_dim, group_.name().c_str());
  return ag::l2_normalize_rows(out_(ag::leaky_relu(hidden_(general), kLeak)));
}

Reconstructor::Reconstructor(const NetDims& dims, Rng& rng) : dims_(dims) {
  hidden_ = Linear::create(group_, "hidden", 2 * dims.latent_dim, dims.hidden_dim, rng);
  out_ = Linear::create(group_, "out", dims.hidden_dim, dims.feature_dim, rng, 0.5);
}

ag::Var Reconstructor::operator()(const ag::Var& liveness, const ag::Var& domain) const {
  check_feature(liveness, dims_.latent_dim, "reconstructor liveness input");
  check_feature(domain, dims_.latent_dim, "reconstructor domain input");
  if (liveness.shape()[0] != domain.shape()[0]) throw DimensionError("reconstructor: batch size mismatch");
  return out_(ag::leaky_relu(hidden_(ag::concat_cols(liveness, domain)), kLeak));
}

BinaryHead::BinaryHead(std::string name, const NetDims& dims, Rng& rng) : dims_(dims), group_(std::move(name)) {
  head_ = Linear::create(group_, "linear", dims.latent_dim, 1, rng, 0.0);
}

ag::Var BinaryHead::logit(const ag::Var& v) const {
  check_feature(v, dims_.latent_dim, group_.name().c_str());
  return head_(v);
}

ag::Var BinaryHead::operator()(const ag::Var& v) const { return ag::sigmoid_clamped(logit(v), kProbClamp); }

Networks::Networks(const NetDims& d, Rng& rng)
    : dims(d),
      encoder(d, rng),
      live_extractor("E_l", d, rng),
      domain_extractor("E_d", d, rng),
      reconstructor(d, rng),
      live_head("C_l", d, rng),
      domain_head("C_d", d, rng) {}

}  // namespace ufda::nets
