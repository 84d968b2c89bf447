#pragma once

#include <cstdint>

#include "ufda/core/autograd.hpp"
#include "ufda/core/rng.hpp"
#include "ufda/nets/params.hpp"

namespace ufda::nets {

// Probability clamp shared by every sigmoid head so log(p) and log(1 - p)
// stay finite.
inline constexpr double kProbClamp = 1e-7;

struct NetDims {
  int64_t channels = 3;
  int64_t patch_size = 64;
  int64_t feature_dim = 128;  // F, general feature
  int64_t latent_dim = 64;    // L, liveness and domain features
  int64_t hidden_dim = 128;   // width of the perceptron hidden layers
  int64_t encoder_width = 8;  // channels of the first conv block, doubled per block
  double stem_cdc_theta = 1.0;  // central-difference strength of the first conv block, 0 = plain
};

struct Linear {
  ag::Var weight;
  ag::Var bias;

  static Linear create(ParamGroup& group, const std::string& prefix, int64_t in, int64_t out, Rng& rng,
                       double gain = 1.0);
  ag::Var operator()(const ag::Var& x) const { return ag::linear(x, weight, bias); }
};

struct Conv2d {
  ag::Var weight;
  ag::Var bias;
  int stride = 1;
  int pad = 0;
  double cdc_theta = 0.0;

  static Conv2d create(ParamGroup& group, const std::string& prefix, int64_t in, int64_t out, int64_t kernel,
                       int stride, int pad, Rng& rng);
  ag::Var operator()(const ag::Var& x) const {
    return ag::conv2d(x, cdc_theta != 0.0 ? ag::central_difference_kernel(weight, cdc_theta) : weight, bias, stride,
                      pad);
  }
};

// E: four stride-2 conv blocks, global average pooling, linear projection to F.
class Encoder {
 public:
  Encoder(const NetDims& dims, Rng& rng);
  // images [N, C, P, P] -> [N, F]
  ag::Var operator()(const ag::Var& images) const;
  ParamGroup& params() { return group_; }
  const ParamGroup& params() const { return group_; }

 private:
  NetDims dims_;
  ParamGroup group_{"E"};
  std::vector<Conv2d> blocks_;
  Linear proj_;
};

// E_l / E_d: F -> hidden -> L perceptron with final L2 normalization.
class FeatureExtractor {
 public:
  FeatureExtractor(std::string name, const NetDims& dims, Rng& rng);
  ag::Var operator()(const ag::Var& general) const;
  ParamGroup& params() { return group_; }
  const ParamGroup& params() const { return group_; }

 private:
  NetDims dims_;
  ParamGroup group_;
  Linear hidden_, out_;
};

// D: perceptron on concatenated (l, d) -> F.
class Reconstructor {
 public:
  Reconstructor(const NetDims& dims, Rng& rng);
  ag::Var operator()(const ag::Var& liveness, const ag::Var& domain) const;
  ParamGroup& params() { return group_; }
  const ParamGroup& params() const { return group_; }

 private:
  NetDims dims_;
  ParamGroup group_{"D"};
  Linear hidden_, out_;
};

// C_l / C_d: linear logit on an L-dim feature followed by a clamped sigmoid.
class BinaryHead {
 public:
  BinaryHead(std::string name, const NetDims& dims, Rng& rng);
  ag::Var logit(const ag::Var& v) const;
  // -> [N, 1] in [kProbClamp, 1 - kProbClamp]
  ag::Var operator()(const ag::Var& v) const;
  ParamGroup& params() { return group_; }
  const ParamGroup& params() const { return group_; }

 private:
  NetDims dims_;
  ParamGroup group_;
  Linear head_;
};

// The UFD stack plus both classifier heads.
struct Networks {
  Networks(const NetDims& dims, Rng& rng);

  NetDims dims;
  Encoder encoder;                    // E
  FeatureExtractor live_extractor;    // E_l
  FeatureExtractor domain_extractor;  // E_d
  Reconstructor reconstructor;        // D
  BinaryHead live_head;               // C_l
  BinaryHead domain_head;             // C_d
};

void check_feature(const ag::Var& v, int64_t dim, const char* what);

}  // namespace ufda::nets
