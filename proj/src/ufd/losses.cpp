#include "ufda/ufd/losses.hpp"

#include "ufda/core/error.hpp"

namespace ufda::ufd {

namespace {

void require_pair(const ag::Var& a, const ag::Var& b, const char* op) {
  if (a.value().rank() != 2 || a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": inputs must be equal-shape [N, dim] batches, got " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  if (a.shape()[0] == 0) throw InputError(std::string(op) + ": empty batch");
}

}  // namespace

ag::Var cosine_rows(const ag::Var& a, const ag::Var& b) {
  require_pair(a, b, "cosine_rows");
  return ag::row_dot(ag::l2_normalize_rows(a), ag::l2_normalize_rows(b));
}

ag::Var loss_domain(const ag::Var& d_fore, const ag::Var& d_back) {
  require_pair(d_fore, d_back, "loss_domain");
  return ag::add_scalar(ag::scale(ag::mean(cosine_rows(d_fore, d_back)), -1.0), 1.0);
}

ag::Var loss_live(const ag::Var& l_s, const ag::Var& l_t) {
  require_pair(l_s, l_t, "loss_live");
  return ag::add_scalar(ag::scale(ag::mean(cosine_rows(l_s, l_t)), -1.0), 1.0);
}

ag::Var loss_dis(const ag::Var& l_s, const ag::Var& d_fore, DisMode mode) {
  require_pair(l_s, d_fore, "loss_dis");
  auto cos = cosine_rows(l_s, d_fore);
  return ag::mean(mode == DisMode::absolute_cosine ? ag::abs(cos) : cos);
}

ag::Var loss_rec(const ag::Var& f, const ag::Var& f_rec, RecNorm norm) {
  require_pair(f, f_rec, "loss_rec");
  auto diff = ag::sub(f, f_rec);
  return ag::mean(norm == RecNorm::l1 ? ag::abs(diff) : ag::square(diff));
}

UfdLossReport UfdLosses::report() const {
  return {l_domain.item(), l_live.item(), l_dis.item(), l_rec.item(), total.item(), lambda1};
}

UfdLosses ufd_total(ag::Var l_domain, ag::Var l_live, ag::Var l_dis, ag::Var l_rec, double lambda1) {
  auto total = ag::add(ag::add(ag::add(l_domain, l_live), l_dis), ag::scale(l_rec, lambda1));
  return {std::move(l_domain), std::move(l_live), std::move(l_dis), std::move(l_rec), std::move(total), lambda1};
}

}  // namespace ufda::ufd
