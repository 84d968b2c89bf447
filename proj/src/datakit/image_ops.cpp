#include "ufda/datakit/image_ops.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ufda/core/error.hpp"

namespace ufda::datakit {

cv::Mat load_image(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (raw.empty()) throw InputError("cannot read image " + path.string());
  cv::Mat out;
  raw.convertTo(out, CV_32FC3, 1.0 / 255.0);
  return out;
}

void save_image(const std::filesystem::path& path, const cv::Mat& image) {
  cv::Mat bytes;
  image.convertTo(bytes, CV_8UC3, 255.0);
  if (!cv::imwrite(path.string(), bytes)) throw InputError("cannot write image " + path.string());
}

void check_face_box(const FaceBox& box, int rows, int cols) {
  if (box.w <= 0 || box.h <= 0 || box.x < 0 || box.y < 0 || box.x + box.w > cols || box.y + box.h > rows) {
    throw InputError("face box (" + std::to_string(box.x) + "," + std::to_string(box.y) + "," +
                     std::to_string(box.w) + "," + std::to_string(box.h) + ") outside " + std::to_string(cols) +
                     "x" + std::to_string(rows) + " image");
  }
}

cv::Mat zero_face_region(const cv::Mat& image, const FaceBox& box) {
  check_face_box(box, image.rows, image.cols);
  cv::Mat bg = image.clone();
  bg(cv::Rect(box.x, box.y, box.w, box.h)).setTo(cv::Scalar::all(0));
  return bg;
}

namespace {

cv::Mat resize_to(const cv::Mat& src, int size) {
  cv::Mat out;
  const bool shrink = src.cols > size || src.rows > size;
  cv::resize(src, out, cv::Size(size, size), 0, 0, shrink ? cv::INTER_AREA : cv::INTER_LINEAR);
  return out;
}

}  // namespace

ForegroundBackground split_foreground_background(const cv::Mat& image, const FaceBox& box, int patch_size) {
  if (image.type() != CV_32FC3) throw InputError("split_foreground_background: expected a CV_32FC3 image");
  check_face_box(box, image.rows, image.cols);
  if (box.x == 0 && box.y == 0 && box.w == image.cols && box.h == image.rows) {
    throw DegenerateError("face box covers the entire image; no background remains");
  }
  ForegroundBackground out;
  out.foreground = resize_to(image(cv::Rect(box.x, box.y, box.w, box.h)), patch_size);
  out.background = resize_to(zero_face_region(image, box), patch_size);
  return out;
}

std::vector<uint8_t> draw_block_mask(int rows, int cols, double ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio <= 0.9)) throw InputError("mask ratio must lie in [0, 0.9]");
  const auto total = static_cast<int64_t>(rows) * cols;
  std::vector<uint8_t> keep(static_cast<size_t>(total), 1);
  const int side_lo = std::max(1, std::min(rows, cols) / 8);
  const int side_hi = std::max(side_lo, std::min(rows, cols) / 4);
  const int64_t lower = static_cast<int64_t>(std::floor((ratio - 0.01) * static_cast<double>(total)));
  const int64_t upper = static_cast<int64_t>(std::floor((ratio + 0.02) * static_cast<double>(total)));
  int64_t removed = 0;
  if (ratio <= 0.0) return keep;

  std::vector<int64_t> kept_idx;
  while (removed < std::max<int64_t>(lower, 1)) {
    // Centre every block on a still-kept pixel so each block makes progress.
    int64_t centre = -1;
    for (int attempt = 0; attempt < 32 && centre < 0; ++attempt) {
      const int64_t i = rng.uniform_int(0, total - 1);
      if (keep[static_cast<size_t>(i)]) centre = i;
    }
    if (centre < 0) {
      kept_idx.clear();
      for (int64_t i = 0; i < total; ++i) {
        if (keep[static_cast<size_t>(i)]) kept_idx.push_back(i);
      }
      centre = kept_idx[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(kept_idx.size()) - 1))];
    }
    int bw = static_cast<int>(rng.uniform_int(side_lo, side_hi));
    int bh = static_cast<int>(rng.uniform_int(side_lo, side_hi));
    const int cy = static_cast<int>(centre / cols), cx = static_cast<int>(centre % cols);

    auto count_new = [&](int w, int h) {
      const int x0 = std::clamp(cx - w / 2, 0, cols - 1), y0 = std::clamp(cy - h / 2, 0, rows - 1);
      const int x1 = std::min(cols, x0 + w), y1 = std::min(rows, y0 + h);
      int64_t n = 0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) n += keep[static_cast<size_t>(y * cols + x)];
      return n;
    };
    // Trim the block until it no longer overshoots the upper tolerance.
    while (removed + count_new(bw, bh) > upper && (bw > 1 || bh > 1)) {
      if (bw >= bh) --bw; else --bh;
    }
    const int x0 = std::clamp(cx - bw / 2, 0, cols - 1), y0 = std::clamp(cy - bh / 2, 0, rows - 1);
    const int x1 = std::min(cols, x0 + bw), y1 = std::min(rows, y0 + bh);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        auto& k = keep[static_cast<size_t>(y * cols + x)];
        removed += k;
        k = 0;
      }
    }
  }
  return keep;
}

MaskedImage random_mask(const cv::Mat& fg_image, double mask_ratio, Rng& rng) {
  if (fg_image.type() != CV_32FC3) throw InputError("random_mask: expected a CV_32FC3 image");
  auto keep = draw_block_mask(fg_image.rows, fg_image.cols, mask_ratio, rng);
  MaskedImage out{fg_image.clone(), cv::Mat(fg_image.rows, fg_image.cols, CV_8UC1)};
  for (int y = 0; y < fg_image.rows; ++y) {
    auto* px = out.image.ptr<cv::Vec3f>(y);
    auto* m = out.mask.ptr<uint8_t>(y);
    for (int x = 0; x < fg_image.cols; ++x) {
      m[x] = keep[static_cast<size_t>(y * fg_image.cols + x)];
      if (!m[x]) px[x] = cv::Vec3f(0, 0, 0);
    }
  }
  return out;
}

void to_chw(const cv::Mat& image, float* dst) {
  const int h = image.rows, w = image.cols;
  for (int y = 0; y < h; ++y) {
    const auto* px = image.ptr<cv::Vec3f>(y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) dst[(c * h + y) * w + x] = px[x][c];
    }
  }
}

double band_energy(const cv::Mat& image, double band_lo, double band_hi) {
  cv::Mat gray;
  if (image.channels() == 3) {
    cv::cvtColor(image, gray, cv::COLOR_BGR2GRAY);
  } else {
    gray = image.clone();
  }
  gray.convertTo(gray, CV_64F);
  gray -= cv::mean(gray)[0];
  cv::Mat spectrum;
  cv::dft(gray, spectrum, cv::DFT_COMPLEX_OUTPUT);
  const int h = gray.rows, w = gray.cols;
  double energy = 0.0;
  for (int v = 0; v < h; ++v) {
    const double fv = (v <= h / 2 ? v : v - h) / static_cast<double>(h);
    for (int u = 0; u < w; ++u) {
      const double fu = (u <= w / 2 ? u : u - w) / static_cast<double>(w);
      const double f = std::hypot(fu, fv);
      if (f < band_lo || f > band_hi) continue;
      const auto c = spectrum.at<cv::Vec2d>(v, u);
      energy += c[0] * c[0] + c[1] * c[1];
    }
  }
  const double n = static_cast<double>(h) * w;
  return energy / (n * n);
}

}  // namespace ufda::datakit
