#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>

#include "ufda/core/rng.hpp"
#include "ufda/datakit/records.hpp"

namespace ufda::datakit {

// Images are CV_32FC3 with values in [0, 1]; masks are CV_8UC1 with 1 = keep.

cv::Mat load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const cv::Mat& image);

// Throws InputError unless the box lies fully inside a rows x cols image.
void check_face_box(const FaceBox& box, int rows, int cols);

// The whole image with the face region set to zero (before any resizing).
cv::Mat zero_face_region(const cv::Mat& image, const FaceBox& box);

struct ForegroundBackground {
  cv::Mat foreground;  // face crop resized to patch_size
  cv::Mat background;  // face-zeroed image resized to patch_size
};

// Raises InputError for a box outside the image, DegenerateError when the box
// covers the whole image (no background left).
ForegroundBackground split_foreground_background(const cv::Mat& image, const FaceBox& box, int patch_size = 64);

// Union of axis-aligned blocks (sides uniform in [size/8, size/4]) covering
// ratio of the pixels to within a couple of percent. Returned as 1 = keep.
std::vector<uint8_t> draw_block_mask(int rows, int cols, double ratio, Rng& rng);

struct MaskedImage {
  cv::Mat image;
  cv::Mat mask;
};

// mask_ratio in [0, 0.9]; removed pixels become exactly 0, kept pixels are unchanged.
MaskedImage random_mask(const cv::Mat& fg_image, double mask_ratio, Rng& rng);

// Copies an HxWx3 float image into a planar CHW buffer.
void to_chw(const cv::Mat& image, float* dst);

// Energy of the mean-removed grayscale image inside the radial frequency band
// [band_lo, band_hi] (cycles per pixel), normalized per pixel (Parseval).
double band_energy(const cv::Mat& image, double band_lo, double band_hi);

}  // namespace ufda::datakit
