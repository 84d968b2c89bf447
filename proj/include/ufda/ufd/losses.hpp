#pragma once

// Unsupervised feature disentanglement objectives. All inputs are [N, dim]
// batches; every loss is a batch mean and returns a differentiable scalar.

#include "ufda/core/autograd.hpp"

namespace ufda::ufd {

enum class RecNorm { l1, l2 };
enum class DisMode { signed_cosine, absolute_cosine };

// Row-wise cosine similarity -> [N, 1]. Zero-norm rows raise DegenerateError.
ag::Var cosine_rows(const ag::Var& a, const ag::Var& b);

// E[1 - cos(d^f, d^b)]
ag::Var loss_domain(const ag::Var& d_fore, const ag::Var& d_back);
// E[1 - cos(l_s, l_t)] over the two masked views of each sample.
ag::Var loss_live(const ag::Var& l_s, const ag::Var& l_t);
// E[cos(l_s, d^f)], or E[|cos|] in absolute mode.
ag::Var loss_dis(const ag::Var& l_s, const ag::Var& d_fore, DisMode mode = DisMode::signed_cosine);
// Mean absolute (l1) or squared (l2) elementwise difference.
ag::Var loss_rec(const ag::Var& f, const ag::Var& f_rec, RecNorm norm = RecNorm::l1);

struct UfdLossReport {
  double l_domain = 0, l_live = 0, l_dis = 0, l_rec = 0, total = 0;
  double lambda1 = 1e-3;
};

struct UfdLosses {
  ag::Var l_domain, l_live, l_dis, l_rec, total;
  double lambda1 = 1e-3;

  UfdLossReport report() const;
};

// total = l_domain + l_live + l_dis + lambda1 * l_rec
UfdLosses ufd_total(ag::Var l_domain, ag::Var l_live, ag::Var l_dis, ag::Var l_rec, double lambda1 = 1e-3);

}  // namespace ufda::ufd
