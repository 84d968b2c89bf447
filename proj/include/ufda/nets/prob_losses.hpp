#pragma once

#include "ufda/core/autograd.hpp"

namespace ufda::nets {

// -E[log p]
inline ag::Var mean_neg_log(const ag::Var& p) { return ag::scale(ag::mean(ag::log(p)), -1.0); }

// -E[log(1 - p)]
inline ag::Var mean_neg_log_complement(const ag::Var& p) {
  return ag::scale(ag::mean(ag::log(ag::add_scalar(ag::scale(p, -1.0), 1.0))), -1.0);
}

}  // namespace ufda::nets
