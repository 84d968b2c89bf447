#include "ufda/domainaug/losses.hpp"

#include "ufda/core/error.hpp"
#include "ufda/nets/prob_losses.hpp"

namespace ufda::domainaug {

ag::Var loss_adv(const ag::Var& p_aug_domain) { return nets::mean_neg_log_complement(p_aug_domain); }

ag::Var domain_entropy(const ag::Var& p_dhat) { return nets::mean_neg_log(p_dhat); }

ag::Var loss_domain_entropy(const nets::BinaryHead& domain_head, const ag::Var& d_hat) {
  if (!domain_head.params().frozen()) {
    throw SequencingError("domain entropy loss needs the pretrained, frozen domain classifier C_d");
  }
  return domain_entropy(domain_head(d_hat));
}

}  // namespace ufda::domainaug
