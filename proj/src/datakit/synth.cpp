#include "ufda/datakit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "ufda/core/error.hpp"
#include "ufda/datakit/image_ops.hpp"

namespace ufda::datakit {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  if (n_train_live <= 0 || n_test_live <= 0) throw InputError("synth: n_train_live and n_test_live must be positive");
  if (n_test_spoof < 0 || n_dev_live < 0 || n_dev_spoof < 0) throw InputError("synth: counts must be non-negative");
  if (image_size < 32) throw InputError("synth: image_size must be at least 32");
  if (domain_palette_count <= 0) throw InputError("synth: domain_palette_count must be positive");
  if (!(liveness_band_lo >= 0 && liveness_band_lo < liveness_band_hi)) throw InputError("synth: bad liveness band");
  if (!(spoof_blur_sigma > 0)) throw InputError("synth: spoof_blur_sigma must be positive");
  if (!(texture_amplitude >= 0)) throw InputError("synth: texture_amplitude must be non-negative");
}

std::vector<DomainStyle> make_palette(int count, uint64_t seed) {
  Rng rng = Rng::derive(seed, {0x5157u});
  std::vector<DomainStyle> out;
  for (int k = 0; k < count; ++k) {
    DomainStyle s;
    for (int c = 0; c < 3; ++c) s.gain[c] = static_cast<float>(rng.uniform(0.65, 1.3));
    for (int c = 0; c < 3; ++c) s.background[c] = static_cast<float>(rng.uniform(0.15, 0.85));
    s.illum_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.illum_strength = rng.uniform(0.2, 0.6);
    out.push_back(s);
  }
  return out;
}

cv::Mat band_limited_noise(int rows, int cols, double lo, double hi, Rng& rng) {
  cv::Mat noise(rows, cols, CV_64F);
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x) noise.at<double>(y, x) = rng.normal();
  cv::Mat spec;
  cv::dft(noise, spec, cv::DFT_COMPLEX_OUTPUT);
  for (int v = 0; v < rows; ++v) {
    const double fv = (v <= rows / 2 ? v : v - rows) / static_cast<double>(rows);
    for (int u = 0; u < cols; ++u) {
      const double fu = (u <= cols / 2 ? u : u - cols) / static_cast<double>(cols);
      const double f = std::hypot(fu, fv);
      if (f < lo || f > hi) spec.at<cv::Vec2d>(v, u) = cv::Vec2d(0, 0);
    }
  }
  cv::Mat out;
  cv::idft(spec, out, cv::DFT_REAL_OUTPUT | cv::DFT_SCALE);
  cv::Scalar mean, stddev;
  cv::meanStdDev(out, mean, stddev);
  out = (out - mean[0]) / std::max(stddev[0], 1e-12);
  return out;
}

RenderedSample render_live(const SynthConfig& config, const DomainStyle& style, Rng& rng) {
  const int size = config.image_size;
  cv::Mat img(size, size, CV_32FC3);

  // Background: domain base color plus slow sinusoidal structure.
  cv::Vec3f base = style.background;
  for (int c = 0; c < 3; ++c) base[c] = static_cast<float>(std::clamp(base[c] + rng.uniform(-0.05, 0.05), 0.0, 1.0));
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 3; ++i) {
    const double f = rng.uniform(0.004, 0.03), theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    waves.push_back({f * std::cos(theta), f * std::sin(theta), rng.uniform(0.0, 2.0 * std::numbers::pi),
                     rng.uniform(0.03, 0.08)});
  }
  for (int y = 0; y < size; ++y) {
    auto* px = img.ptr<cv::Vec3f>(y);
    for (int x = 0; x < size; ++x) {
      double s = 0;
      for (const auto& w : waves) s += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
      for (int c = 0; c < 3; ++c) px[x][c] = static_cast<float>(base[c] + s);
    }
  }

  // Face box and elliptical face.
  const int side = static_cast<int>(rng.uniform_int(static_cast<int64_t>(0.45 * size), static_cast<int64_t>(0.55 * size)));
  const int margin = size / 10;
  FaceBox box;
  box.w = side;
  box.h = std::min(size - 2 * margin, static_cast<int>(side * rng.uniform(1.0, 1.12)));
  box.x = static_cast<int>(rng.uniform_int(margin, size - margin - box.w));
  box.y = static_cast<int>(rng.uniform_int(margin, size - margin - box.h));

  const double tone = rng.uniform(0.45, 0.8);
  const cv::Vec3f skin(static_cast<float>(tone * rng.uniform(0.65, 0.8)), static_cast<float>(tone * rng.uniform(0.78, 0.9)),
                       static_cast<float>(tone));
  const double cx = box.x + box.w / 2.0, cy = box.y + box.h / 2.0;
  const double ax = 0.42 * box.w, ay = 0.46 * box.h;
  const double eye_dx = rng.uniform(0.15, 0.2) * box.w, eye_dy = -rng.uniform(0.08, 0.14) * box.h;
  const double mouth_dy = rng.uniform(0.18, 0.26) * box.h;
  cv::Mat texture = band_limited_noise(box.h, box.w, config.liveness_band_lo, config.liveness_band_hi, rng);

  auto inside = [](double dx, double dy, double rx, double ry) { return (dx * dx) / (rx * rx) + (dy * dy) / (ry * ry) <= 1.0; };
  for (int y = box.y; y < box.y + box.h; ++y) {
    auto* px = img.ptr<cv::Vec3f>(y);
    for (int x = box.x; x < box.x + box.w; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double r2 = (dx * dx) / (ax * ax) + (dy * dy) / (ay * ay);
      if (r2 > 1.0) continue;
      cv::Vec3f v = skin * static_cast<float>(0.82 + 0.18 * (1.0 - r2));
      if (inside(dx - eye_dx, dy - eye_dy, 0.07 * box.w, 0.04 * box.h) ||
          inside(dx + eye_dx, dy - eye_dy, 0.07 * box.w, 0.04 * box.h)) {
        v *= 0.35f;
      } else if (inside(dx, dy - mouth_dy, 0.15 * box.w, 0.035 * box.h)) {
        v = cv::Vec3f(v[0] * 0.5f, v[1] * 0.5f, v[2] * 0.8f);
      }
      const float t = static_cast<float>(config.texture_amplitude * texture.at<double>(y - box.y, x - box.x));
      px[x] = v + cv::Vec3f(t, t, t);
    }
  }

  // Domain style over the whole capture: per-channel cast and a linear
  // illumination gradient shared by face and background.
  cv::Vec3f gain = style.gain;
  for (int c = 0; c < 3; ++c) gain[c] *= static_cast<float>(rng.uniform(0.95, 1.05));
  const double angle = style.illum_angle + rng.uniform(-0.3, 0.3);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < size; ++y) {
    auto* px = img.ptr<cv::Vec3f>(y);
    for (int x = 0; x < size; ++x) {
      const double g = 1.0 + style.illum_strength * (((x - size / 2.0) * ca + (y - size / 2.0) * sa) / size);
      for (int c = 0; c < 3; ++c) px[x][c] = static_cast<float>(std::clamp(px[x][c] * gain[c] * g, 0.0, 1.0));
    }
  }
  return {img, box};
}

cv::Mat make_spoof(const cv::Mat& live, double blur_sigma) {
  if (!(blur_sigma > 0)) throw InputError("make_spoof: blur sigma must be positive");
  cv::Mat blurred, wide, out;
  cv::GaussianBlur(live, blurred, cv::Size(0, 0), blur_sigma, blur_sigma, cv::BORDER_REFLECT);
  cv::GaussianBlur(blurred, wide, cv::Size(0, 0), 3.0 * blur_sigma, 3.0 * blur_sigma, cv::BORDER_REFLECT);
  // Unsharp masking restores edge contrast at mid frequencies only.
  out = blurred + 0.8 * (blurred - wide);
  cv::min(cv::max(out, 0.0), 1.0, out);
  return out;
}

Manifest generate_synthetic(const SynthConfig& config, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir / "images");
  const auto palette = make_palette(config.domain_palette_count, config.seed);
  Rng rng(config.seed);

  Manifest manifest;
  manifest.base_dir = out_dir;
  auto emit = [&](Split split, Label label, int64_t count) {
    for (int64_t i = 0; i < count; ++i) {
      const auto domain = static_cast<int>(rng.uniform_int(0, config.domain_palette_count - 1));
      auto sample = render_live(config, palette[static_cast<size_t>(domain)], rng);
      cv::Mat image = label == Label::live ? sample.image : make_spoof(sample.image, config.spoof_blur_sigma);
      char name[64];
      std::snprintf(name, sizeof(name), "images/%s_%s_%05lld.png", to_string(split).c_str(), to_string(label).c_str(),
                    static_cast<long long>(i));
      save_image(out_dir / name, image);
      manifest.records.push_back({name, label, sample.box, split, "d" + std::to_string(domain)});
    }
  };
  emit(Split::train, Label::live, config.n_train_live);
  emit(Split::dev, Label::live, config.n_dev_live);
  emit(Split::dev, Label::spoof, config.n_dev_spoof);
  emit(Split::test, Label::live, config.n_test_live);
  emit(Split::test, Label::spoof, config.n_test_spoof);
  write_manifest(out_dir / "manifest.csv", manifest.records);
  return manifest;
}

}  // namespace ufda::datakit
