#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>

#include "ufda/core/rng.hpp"
#include "ufda/datakit/records.hpp"

namespace ufda::datakit {

// Procedural live/spoof dataset with independently controlled domain style
// (color cast, illumination gradient, background palette) and liveness cue
// (band-limited skin texture).
struct SynthConfig {
  int64_t n_train_live = 2000;
  int64_t n_test_live = 500;
  int64_t n_test_spoof = 500;
  int64_t n_dev_live = 0;
  int64_t n_dev_spoof = 0;
  int image_size = 128;            // raw image side in pixels
  int domain_palette_count = 4;
  double liveness_band_lo = 0.25;  // cycles per pixel
  double liveness_band_hi = 0.5;
  double texture_amplitude = 0.08;
  double spoof_blur_sigma = 1.5;   // pixels
  uint64_t seed = 0;

  void validate() const;
};

struct DomainStyle {
  cv::Vec3f gain;        // per-channel color cast
  cv::Vec3f background;  // base background color
  double illum_angle = 0;
  double illum_strength = 0;
};

std::vector<DomainStyle> make_palette(int count, uint64_t seed);

struct RenderedSample {
  cv::Mat image;  // CV_32FC3 in [0, 1]
  FaceBox box;
};

// One live capture under the given style.
RenderedSample render_live(const SynthConfig& config, const DomainStyle& style, Rng& rng);

// Presentation attack: Gaussian blur then unsharp re-sharpening of a live render.
cv::Mat make_spoof(const cv::Mat& live, double blur_sigma);

// White noise band-passed to [lo, hi] cycles/pixel, unit standard deviation.
cv::Mat band_limited_noise(int rows, int cols, double lo, double hi, Rng& rng);

// Writes out_dir/images/*.png and out_dir/manifest.csv. Deterministic in
// config.seed: the same config produces byte-identical files.
Manifest generate_synthetic(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace ufda::datakit
