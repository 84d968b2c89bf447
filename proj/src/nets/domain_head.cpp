#include "ufda/nets/domain_head.hpp"

#include <algorithm>
#include <numeric>

#include "ufda/core/error.hpp"
#include "ufda/nets/prob_losses.hpp"

namespace ufda::nets {

namespace {

Tensor gather_rows(const Tensor& src, const std::vector<int64_t>& idx) {
  const int64_t d = src.cols();
  Tensor out({static_cast<int64_t>(idx.size()), d});
  for (size_t i = 0; i < idx.size(); ++i) std::copy_n(src.row(idx[i]).begin(), d, out.row(static_cast<int64_t>(i)).begin());
  return out;
}

}  // namespace

DomainPretrainReport pretrain_domain_head(BinaryHead& head, Adam& optimizer, const Tensor& domain_features,
                                          const Tensor& liveness_features, const DomainPretrainOptions& options) {
  if (domain_features.rank() != 2 || liveness_features.rank() != 2 ||
      domain_features.cols() != liveness_features.cols()) {
    throw DimensionError("pretrain_domain_head: feature matrices must be [N, L] with equal L");
  }
  if (domain_features.rows() == 0 || liveness_features.rows() == 0) {
    throw InputError("pretrain_domain_head: no harvested features");
  }
  if (head.params().frozen()) throw SequencingError("pretrain_domain_head: C_d is already frozen");

  const int64_t nd = domain_features.rows();
  const int64_t nl = liveness_features.rows();
  Rng rng = Rng::derive(options.seed, {0xCDu});
  head.params().set_trainable(true);

  double last_loss = 0.0;
  std::vector<int64_t> order_d(static_cast<size_t>(nd)), order_l(static_cast<size_t>(nl));
  for (int64_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order_d.begin(), order_d.end(), 0);
    std::iota(order_l.begin(), order_l.end(), 0);
    for (int64_t i = nd - 1; i > 0; --i) std::swap(order_d[i], order_d[rng.uniform_int(0, i)]);
    for (int64_t i = nl - 1; i > 0; --i) std::swap(order_l[i], order_l[rng.uniform_int(0, i)]);
    const int64_t n = std::min(nd, nl);
    const int64_t bs = std::max<int64_t>(1, std::min(options.batch_size, n));
    for (int64_t start = 0; start + bs <= n; start += bs) {
      std::vector<int64_t> bd(order_d.begin() + start, order_d.begin() + start + bs);
      std::vector<int64_t> bl(order_l.begin() + start, order_l.begin() + start + bs);
      head.params().zero_grad();
      auto p_dom = head(ag::Var::constant(gather_rows(domain_features, bd)));
      auto p_live = head(ag::Var::constant(gather_rows(liveness_features, bl)));
      auto loss = ag::add(mean_neg_log(p_dom), mean_neg_log_complement(p_live));
      ag::backward(loss);
      optimizer.step(head.params());
      last_loss = loss.item();
    }
  }

  DomainPretrainReport report;
  report.train_accuracy = domain_head_accuracy(head, domain_features, liveness_features);
  report.final_loss = last_loss;
  report.samples = nd + nl;
  head.params().freeze();
  return report;
}

double domain_head_accuracy(const BinaryHead& head, const Tensor& domain_features, const Tensor& liveness_features) {
  const auto pd = head(ag::Var::constant(domain_features)).value();
  const auto pl = head(ag::Var::constant(liveness_features)).value();
  int64_t correct = 0;
  for (double p : pd.values()) correct += p >= 0.5 ? 1 : 0;
  for (double p : pl.values()) correct += p < 0.5 ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(pd.numel() + pl.numel());
}

double mean_probability(const BinaryHead& head, const Tensor& features) {
  const auto p = head(ag::Var::constant(features)).value();
  double acc = 0;
  for (double v : p.values()) acc += v;
  return acc / static_cast<double>(p.numel());
}

}  // namespace ufda::nets
