#include "ufda/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ufda/core/error.hpp"

namespace ufda::evalkit {

int64_t ScoreSet::count(int label) const { return std::count(labels.begin(), labels.end(), label); }

void ScoreSet::validate(bool both_labels) const {
  if (scores.size() != labels.size()) throw InputError("score set: scores and labels differ in length");
  if (!ids.empty() && ids.size() != scores.size()) throw InputError("score set: ids and scores differ in length");
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != kLive && labels[i] != kAttack) throw InputError("score set: labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw InputError("score set: non-finite score");
  }
  if (both_labels && (count(kLive) == 0 || count(kAttack) == 0)) {
    throw InputError("score set: needs both live and attack samples");
  }
}

std::vector<RocPoint> roc_curve(const ScoreSet& set) {
  set.validate(true);
  std::vector<size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return set.scores[a] > set.scores[b]; });
  const auto pos = static_cast<double>(set.count(kLive));
  const auto neg = static_cast<double>(set.count(kAttack));

  std::vector<RocPoint> roc{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  int64_t tp = 0, fp = 0;
  for (size_t i = 0; i < order.size();) {
    const double cut = set.scores[order[i]];
    for (; i < order.size() && set.scores[order[i]] == cut; ++i) {
      if (set.labels[order[i]] == kLive) ++tp; else ++fp;
    }
    roc.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos, cut});
  }
  return roc;
}

double auc(const std::vector<RocPoint>& roc) {
  double area = 0;
  for (size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2;
  }
  return area;
}

Youden youden_threshold(const std::vector<RocPoint>& roc) {
  if (roc.empty()) throw InputError("youden_threshold: empty curve");
  size_t best = 0;
  double best_j = roc[0].tpr - roc[0].fpr;
  // Thresholds decrease along the curve, so >= keeps the smallest cut on ties.
  for (size_t i = 1; i < roc.size(); ++i) {
    const double j = roc[i].tpr - roc[i].fpr;
    if (j >= best_j) {
      best_j = j;
      best = i;
    }
  }
  double tau;
  if (best == 0) {
    tau = roc.size() > 1 ? (1.0 + roc[1].threshold) / 2 : 1.0;
  } else if (best + 1 < roc.size()) {
    tau = (roc[best].threshold + roc[best + 1].threshold) / 2;
  } else {
    tau = roc[best].threshold / 2;
  }
  return {tau, best_j};
}

MetricsReport pad_metrics(const ScoreSet& set, double tau) {
  set.validate(true);
  if (!(tau >= 0 && tau <= 1)) throw InputError("pad_metrics: tau must be in [0, 1]");
  MetricsReport r;
  r.threshold = tau;
  r.split = set.split;
  for (size_t i = 0; i < set.size(); ++i) {
    const bool called_live = set.scores[i] >= tau;
    if (set.labels[i] == kLive) {
      called_live ? ++r.tp : ++r.fn;
    } else {
      called_live ? ++r.fp : ++r.tn;
    }
  }
  r.n_live = r.tp + r.fn;
  r.n_attack = r.fp + r.tn;
  r.apcer = static_cast<double>(r.fp) / static_cast<double>(r.n_attack);
  r.bpcer = static_cast<double>(r.fn) / static_cast<double>(r.n_live);
  r.acer = (r.apcer + r.bpcer) / 2;
  r.hter = (r.apcer + r.bpcer) / 2;
  return r;
}

MetricsReport evaluate(const ScoreSet& set, const ScoreSet& threshold_set) {
  const auto youden = youden_threshold(roc_curve(threshold_set));
  auto r = pad_metrics(set, std::clamp(youden.tau, 0.0, 1.0));
  r.auc = auc(roc_curve(set));
  r.youden_j = youden.j;
  r.threshold_split = threshold_set.split;
  return r;
}

}  // namespace ufda::evalkit
