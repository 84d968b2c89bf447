#include "ufda/datakit/batches.hpp"

#include <algorithm>
#include <numeric>

#include "ufda/core/error.hpp"
#include "ufda/datakit/image_ops.hpp"

namespace ufda::datakit {

PatchDataset PatchDataset::load(const Manifest& manifest, std::optional<Split> split, int patch_size) {
  PatchDataset ds(patch_size);
  const size_t plane = static_cast<size_t>(3 * patch_size * patch_size);
  for (const auto& r : manifest.records) {
    if (split && r.split != *split) continue;
    const cv::Mat image = load_image(manifest.resolve(r));
    auto parts = split_foreground_background(image, r.face_box, patch_size);
    PatchSample s;
    s.fg.resize(plane);
    s.bg.resize(plane);
    to_chw(parts.foreground, s.fg.data());
    to_chw(parts.background, s.bg.data());
    s.label = r.label;
    s.id = r.image_path;
    s.domain_tag = r.domain_tag;
    ds.samples_.push_back(std::move(s));
  }
  return ds;
}

Tensor PatchDataset::foreground(const std::vector<size_t>& idx) const {
  const int64_t p = patch_size_;
  const size_t plane = static_cast<size_t>(3 * p * p);
  Tensor out({static_cast<int64_t>(idx.size()), 3, p, p});
  for (size_t i = 0; i < idx.size(); ++i) {
    const auto& fg = samples_.at(idx[i]).fg;
    std::copy(fg.begin(), fg.end(), out.data() + i * plane);
  }
  return out;
}

BatchIterator::BatchIterator(const PatchDataset& dataset, BatchOptions options, Rng rng)
    : dataset_(&dataset), options_(options), rng_(std::move(rng)) {
  if (dataset.empty()) throw InputError("batch_iter: empty manifest split");
  if (options.batch_size < 2) throw InputError("batch_iter: batch_size must be at least 2");
  if (!(options.mask_ratio >= 0.0 && options.mask_ratio <= 0.9)) throw InputError("batch_iter: mask ratio out of range");
  order_.resize(dataset.size());
  std::iota(order_.begin(), order_.end(), size_t{0});
  for (size_t i = order_.size() - 1; i > 0; --i) {
    std::swap(order_[i], order_[static_cast<size_t>(rng_.uniform_int(0, static_cast<int64_t>(i)))]);
  }
}

int64_t BatchIterator::batches_per_epoch() const {
  return static_cast<int64_t>(dataset_->size()) / options_.batch_size;
}

std::optional<PatchBatch> BatchIterator::next() {
  const auto bs = static_cast<size_t>(options_.batch_size);
  if (cursor_ + bs > order_.size()) return std::nullopt;
  const int64_t p = dataset_->patch_size();
  const size_t pix = static_cast<size_t>(p * p);
  PatchBatch b;
  const auto n = static_cast<int64_t>(bs);
  b.fg = Tensor({n, 3, p, p});
  b.fg_masked_s = Tensor({n, 3, p, p});
  b.fg_masked_t = Tensor({n, 3, p, p});
  b.bg = Tensor({n, 3, p, p});
  b.masks_s = Tensor({n, p, p});
  b.masks_t = Tensor({n, p, p});
  for (size_t i = 0; i < bs; ++i) {
    const size_t id = order_[cursor_ + i];
    const auto& s = (*dataset_)[id];
    b.sample_ids.push_back(id);
    const auto ms = draw_block_mask(static_cast<int>(p), static_cast<int>(p), options_.mask_ratio, rng_);
    const auto mt = draw_block_mask(static_cast<int>(p), static_cast<int>(p), options_.mask_ratio, rng_);
    double* fg = b.fg.data() + i * 3 * pix;
    double* xs = b.fg_masked_s.data() + i * 3 * pix;
    double* xt = b.fg_masked_t.data() + i * 3 * pix;
    double* bg = b.bg.data() + i * 3 * pix;
    for (size_t k = 0; k < pix; ++k) {
      b.masks_s[static_cast<int64_t>(i * pix + k)] = ms[k];
      b.masks_t[static_cast<int64_t>(i * pix + k)] = mt[k];
    }
    for (size_t c = 0; c < 3; ++c) {
      for (size_t k = 0; k < pix; ++k) {
        const double v = s.fg[c * pix + k];
        fg[c * pix + k] = v;
        xs[c * pix + k] = ms[k] ? v : 0.0;
        xt[c * pix + k] = mt[k] ? v : 0.0;
        bg[c * pix + k] = s.bg[c * pix + k];
      }
    }
  }
  cursor_ += bs;
  return b;
}

}  // namespace ufda::datakit
