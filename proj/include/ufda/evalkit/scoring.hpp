#pragma once

#include <optional>

#include <opencv2/core.hpp>

#include "ufda/datakit/batches.hpp"
#include "ufda/evalkit/metrics.hpp"
#include "ufda/trainer/model_state.hpp"

namespace ufda::evalkit {

// C_l(E_l(E(x))) on the unmasked foreground crop. InputError when the face box
// is missing or outside the image.
double score(const trainer::ModelState& state, const cv::Mat& image, const std::optional<datakit::FaceBox>& box);

// Scores every sample of a loaded dataset, in dataset order.
ScoreSet score_dataset(const trainer::ModelState& state, const datakit::PatchDataset& data,
                       const std::string& split_tag, int64_t batch_size = 64);

// Probe statistics of the learned representation on live samples.
struct FeatureProbe {
  double mean_abs_cos_l_d = 0;   // mean |cos(l, d^f)|
  double mean_cd_dhat = 0;       // mean C_d(d^)
  double mean_cd_l = 0;          // mean C_d(l)
  double mean_cos_ltilde_l = 0;  // mean cos(phi(l), l)
  int64_t samples = 0;
};

FeatureProbe probe_features(const trainer::ModelState& state, const datakit::PatchDataset& live, uint64_t seed,
                            int64_t batch_size = 64);

}  // namespace ufda::evalkit
