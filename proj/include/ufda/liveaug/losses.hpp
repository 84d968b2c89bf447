#pragma once

#include "ufda/core/autograd.hpp"
#include "ufda/liveaug/memory_bank.hpp"

namespace ufda::liveaug {

// E[cos(l~_s, l_t)]; l_t is detached so the gradient only reaches phi.
ag::Var loss_unl(const ag::Var& l_tilde_s, const ag::Var& l_t);

// -E[log p_live + log(1 - p_aug)]
ag::Var loss_pres(const ag::Var& p_live, const ag::Var& p_aug);

struct MineLoss {
  ag::Var value;
  bool skipped = false;  // bank was empty, term contributes 0
};

// InfoNCE-style mining loss with (l~, l~_M) as the positive pair and every
// bank entry as a negative, temperature 1.
MineLoss loss_mine(const ag::Var& l_tilde, const ag::Var& l_tilde_masked, const MemoryBank& bank);

// l_unl + l_pres + lambda2 * l_mine
ag::Var liveaug_total(const ag::Var& l_unl, const ag::Var& l_pres, const ag::Var& l_mine, double lambda2 = 1e-1);

}  // namespace ufda::liveaug
