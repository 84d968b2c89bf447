#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ufda::evalkit {

inline constexpr int kLive = 1;
inline constexpr int kAttack = 0;

struct ScoreSet {
  std::vector<double> scores;  // liveness probabilities in [0, 1]
  std::vector<int> labels;     // kLive or kAttack
  std::vector<std::string> ids;  // optional, empty or one per score
  std::string split;

  size_t size() const { return scores.size(); }
  int64_t count(int label) const;
  // InputError on length mismatch, bad labels or non-finite scores; with
  // both_labels, also when either class is missing.
  void validate(bool both_labels) const;
};

// One operating point of the rule "live iff s >= threshold". The first point
// uses the +inf sentinel (nothing called live).
struct RocPoint {
  double fpr = 0;
  double tpr = 0;
  double threshold = 0;
};

// Cuts at +inf and at every unique score in decreasing order; fpr and tpr are
// nondecreasing along the list and the last point is (1, 1).
std::vector<RocPoint> roc_curve(const ScoreSet& set);

// Trapezoidal area under the curve.
double auc(const std::vector<RocPoint>& roc);

struct Youden {
  double tau = 0;  // between the optimal cut score and the next lower unique score
  double j = 0;    // tpr - fpr at the optimal cut
};

// Maximizes J over the cuts; ties go to the smallest cut. At the lowest cut
// there is no lower score and tau is half of it; at the sentinel it is the
// midpoint of 1 and the highest score.
Youden youden_threshold(const std::vector<RocPoint>& roc);

struct MetricsReport {
  double auc = 0;
  double threshold = 0;
  double youden_j = 0;
  double apcer = 0;
  double bpcer = 0;
  double acer = 0;
  double hter = 0;
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;  // live is the positive class
  int64_t n_live = 0, n_attack = 0;
  std::string split;
  std::string threshold_split;
};

// Error rates at tau (live iff s >= tau). HTER takes FAR = APCER and
// FRR = BPCER. auc and youden_j are left for the caller.
MetricsReport pad_metrics(const ScoreSet& set, double tau);

// Full report: AUC and threshold computed on threshold_set, rates on set.
MetricsReport evaluate(const ScoreSet& set, const ScoreSet& threshold_set);

}  // namespace ufda::evalkit
