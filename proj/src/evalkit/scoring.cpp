#include "ufda/evalkit/scoring.hpp"

#include <numeric>

#include "ufda/core/error.hpp"
#include "ufda/datakit/image_ops.hpp"
#include "ufda/ufd/losses.hpp"

namespace ufda::evalkit {

using ag::Var;

namespace {

Var live_scores(const trainer::ModelState& s, const Tensor& fg) {
  auto l = s.nets.live_extractor(s.nets.encoder(Var::constant(fg)));
  return s.nets.live_head(l);
}

template <typename Fn>
void for_each_chunk(const datakit::PatchDataset& data, int64_t batch_size, Fn&& fn) {
  if (batch_size <= 0) throw InputError("batch_size must be positive");
  for (size_t start = 0; start < data.size(); start += static_cast<size_t>(batch_size)) {
    std::vector<size_t> idx(std::min(static_cast<size_t>(batch_size), data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    fn(idx);
  }
}

}  // namespace

double score(const trainer::ModelState& s, const cv::Mat& image, const std::optional<datakit::FaceBox>& box) {
  if (!box) throw InputError("score: a face box is required");
  const int p = static_cast<int>(s.config.dims.patch_size);
  auto parts = datakit::split_foreground_background(image, *box, p);
  Tensor fg({1, 3, p, p});
  std::vector<float> chw(static_cast<size_t>(3 * p * p));
  datakit::to_chw(parts.foreground, chw.data());
  std::copy(chw.begin(), chw.end(), fg.data());
  return live_scores(s, fg).item();
}

ScoreSet score_dataset(const trainer::ModelState& s, const datakit::PatchDataset& data, const std::string& split_tag,
                       int64_t batch_size) {
  if (data.patch_size() != s.config.dims.patch_size) {
    throw DimensionError("score_dataset: dataset patch size differs from the model's");
  }
  ScoreSet out;
  out.split = split_tag;
  for_each_chunk(data, batch_size, [&](const std::vector<size_t>& idx) {
    const auto p = live_scores(s, data.foreground(idx)).value();
    for (size_t i = 0; i < idx.size(); ++i) {
      const auto& sample = data[idx[i]];
      out.scores.push_back(p[static_cast<int64_t>(i)]);
      out.labels.push_back(sample.label == datakit::Label::live ? kLive : kAttack);
      out.ids.push_back(sample.id);
    }
  });
  return out;
}

FeatureProbe probe_features(const trainer::ModelState& s, const datakit::PatchDataset& live, uint64_t seed,
                            int64_t batch_size) {
  FeatureProbe r;
  Rng rng = Rng::derive(seed, {0x9B0Bu});
  double cos_ld = 0, cd_hat = 0, cd_l = 0, cos_tl = 0;
  for_each_chunk(live, batch_size, [&](const std::vector<size_t>& idx) {
    auto f = s.nets.encoder(Var::constant(live.foreground(idx)));
    auto l = s.nets.live_extractor(f);
    auto d = s.nets.domain_extractor(f);
    auto c = ufd::cosine_rows(l, d).value();
    auto d_hat = domainaug::gin_forward(s.gin, s.generator, d, rng).output;
    auto p_hat = s.nets.domain_head(d_hat).value();
    auto p_l = s.nets.domain_head(l).value();
    auto l_tilde = s.adaptor(l, rng).output;
    auto ct = ufd::cosine_rows(l_tilde, l).value();
    for (size_t i = 0; i < idx.size(); ++i) {
      const auto k = static_cast<int64_t>(i);
      cos_ld += std::abs(c[k]);
      cd_hat += p_hat[k];
      cd_l += p_l[k];
      cos_tl += ct[k];
    }
    r.samples += static_cast<int64_t>(idx.size());
  });
  if (r.samples == 0) throw InputError("probe_features: no samples");
  const auto n = static_cast<double>(r.samples);
  r.mean_abs_cos_l_d = cos_ld / n;
  r.mean_cd_dhat = cd_hat / n;
  r.mean_cd_l = cd_l / n;
  r.mean_cos_ltilde_l = cos_tl / n;
  return r;
}

}  // namespace ufda::evalkit
