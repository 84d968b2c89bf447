#pragma once

#include "ufda/core/autograd.hpp"
#include "ufda/nets/networks.hpp"

namespace ufda::domainaug {

// -E[log(1 - p)] on p = C_l(E_l(D(l, d^))).
ag::Var loss_adv(const ag::Var& p_aug_domain);

// -E[log p] on p = C_d(d^).
ag::Var domain_entropy(const ag::Var& p_dhat);

// Evaluates the frozen C_d on d^ and applies domain_entropy. Raises
// SequencingError if C_d has not been pretrained and frozen.
ag::Var loss_domain_entropy(const nets::BinaryHead& domain_head, const ag::Var& d_hat);

inline ag::Var domainaug_total(const ag::Var& l_adv, const ag::Var& l_d) { return ag::add(l_adv, l_d); }

}  // namespace ufda::domainaug
