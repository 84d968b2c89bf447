#include "ufda/liveaug/losses.hpp"

#include "ufda/core/error.hpp"
#include "ufda/nets/prob_losses.hpp"
#include "ufda/ufd/losses.hpp"

namespace ufda::liveaug {

ag::Var loss_unl(const ag::Var& l_tilde_s, const ag::Var& l_t) {
  return ag::mean(ufd::cosine_rows(l_tilde_s, ag::detach(l_t)));
}

ag::Var loss_pres(const ag::Var& p_live, const ag::Var& p_aug) {
  if (p_live.shape() != p_aug.shape()) throw DimensionError("loss_pres: probability batches differ in shape");
  return ag::add(nets::mean_neg_log(p_live), nets::mean_neg_log_complement(p_aug));
}

MineLoss loss_mine(const ag::Var& l_tilde, const ag::Var& l_tilde_masked, const MemoryBank& bank) {
  if (bank.empty()) return {ag::Var::constant(Tensor::scalar(0.0)), true};
  auto positive = ufd::cosine_rows(l_tilde, l_tilde_masked);  // [N, 1]
  auto entries = ag::Var::constant(bank.as_matrix());
  if (entries.shape()[1] != l_tilde.shape()[1]) throw DimensionError("loss_mine: bank dimension mismatch");
  auto negatives = ag::linear(ag::l2_normalize_rows(l_tilde), entries, ag::Var());  // [N, K]
  auto logits = ag::concat_cols(positive, negatives);
  return {ag::mean(ag::sub(ag::logsumexp_rows(logits), positive)), false};
}

ag::Var liveaug_total(const ag::Var& l_unl, const ag::Var& l_pres, const ag::Var& l_mine, double lambda2) {
  return ag::add(ag::add(l_unl, l_pres), ag::scale(l_mine, lambda2));
}

}  // namespace ufda::liveaug
