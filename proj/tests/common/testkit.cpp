#include "testkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include "ufda/core/error.hpp"
#include "ufda/datakit/image_ops.hpp"
#include "ufda/datakit/synth.hpp"
#include "ufda/domainaug/gin.hpp"
#include "ufda/domainaug/losses.hpp"
#include "ufda/evalkit/scoring.hpp"
#include "ufda/liveaug/adaptor.hpp"
#include "ufda/liveaug/losses.hpp"
#include "ufda/liveaug/memory_bank.hpp"
#include "ufda/nets/networks.hpp"
#include "ufda/trainer/checkpoint.hpp"
#include "ufda/trainer/model_state.hpp"
#include "ufda/trainer/train.hpp"
#include "ufda/ufd/losses.hpp"

namespace fs = std::filesystem;

namespace ufda::testkit {

using ag::Var;

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  Rng rng(static_cast<uint64_t>(std::hash<std::string>{}(tag)) ^ static_cast<uint64_t>(::getpid()));
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto p = fs::temp_directory_path() /
             ("ufda_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" +
              std::to_string(rng.next_u64() % 100000));
    if (fs::create_directories(p)) {
      path_ = p;
      return;
    }
  }
  throw Error("cannot create a temp directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Tensor random_tensor(const Shape& shape, Rng& rng, double stddev) {
  Tensor t(shape);
  for (auto& v : t.storage()) v = rng.normal(0.0, stddev);
  return t;
}

Tensor unit_rows(Tensor t) {
  for (int64_t r = 0; r < t.rows(); ++r) {
    auto row = t.row(r);
    double n = 0;
    for (double v : row) n += v * v;
    n = std::sqrt(n);
    for (double& v : row) v /= n;
  }
  return t;
}

Tensor random_unit_rows(int64_t rows, int64_t cols, Rng& rng) { return unit_rows(random_tensor({rows, cols}, rng)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  double d = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return d / std::sqrt(na * nb);
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace {

Tensor random_direction(const Shape& shape, Rng& rng) {
  Tensor d = random_tensor(shape, rng);
  double n = 0;
  for (double v : d.storage()) n += v * v;
  n = std::sqrt(n);
  for (double& v : d.storage()) v /= n;
  return d;
}

Tensor axpy(const Tensor& x, double a, const Tensor& d) {
  Tensor out = x;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += a * d[i];
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

namespace {

// Central difference of t -> phi(t) at 0 with step h. The networks between a
// loss and the parameters under test are piecewise linear, and a probe whose
// interval straddles a kink measures the kink, not the gradient. Such
// intervals are recognisable because the difference at h/4 disagrees with
// the one at h; the direction is then redrawn (the analytic side is never
// consulted, so a wrong gradient still fails).
double smooth_central_difference(const std::function<double(const Tensor&, double)>& at,
                                 const std::function<Tensor()>& direction, Tensor& d, double h) {
  double fd = 0, best = INFINITY;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Tensor cand = direction();
    const double coarse = (at(cand, h) - at(cand, -h)) / (2 * h);
    const double fine = (at(cand, h / 4) - at(cand, -h / 4)) / (h / 2);
    const double gap = std::abs(coarse - fine) / std::max({std::abs(coarse), std::abs(fine), 1e-6});
    if (gap < best) {
      best = gap;
      fd = coarse;
      d = std::move(cand);
    }
    if (gap <= 1e-5) break;
  }
  if (best > 1e-5) std::fprintf(stderr, "finite differences: no kink-free direction found (gap %.3g)\n", best);
  return fd;
}

}  // namespace

double input_gradient_error(const std::function<Var(const Var&)>& f, const Tensor& x, Rng& rng, int probes,
                            double h) {
  auto input = Var::parameter(x);
  ag::backward(f(input));
  const Tensor g = input.grad();
  auto at = [&](const Tensor& d, double t) { return f(Var::constant(axpy(x, t, d))).item(); };
  auto direction = [&] { return random_direction(x.shape(), rng); };
  double worst = 0;
  for (int p = 0; p < probes; ++p) {
    Tensor d;
    const double fd = smooth_central_difference(at, direction, d, h);
    worst = std::max(worst, relative_error(dot(g, d), fd));
  }
  return worst;
}

double param_gradient_error(const std::function<Var()>& loss, Var param, Rng& rng, int probes, double h) {
  const bool was = param.requires_grad();
  param.set_requires_grad(true);
  param.zero_grad();
  ag::backward(loss());
  const Tensor g = param.grad();
  const Tensor original = param.value();
  auto at = [&](const Tensor& d, double t) {
    param.mutable_value() = axpy(original, t, d);
    const double v = loss().item();
    param.mutable_value() = original;
    return v;
  };
  auto direction = [&] { return random_direction(original.shape(), rng); };
  double worst = 0;
  for (int p = 0; p < probes; ++p) {
    Tensor d;
    const double fd = smooth_central_difference(at, direction, d, h);
    worst = std::max(worst, relative_error(dot(g, d), fd));
  }
  param.zero_grad();
  param.set_requires_grad(was);
  return worst;
}

double auc_pair_oracle(const evalkit::ScoreSet& set) {
  double wins = 0;
  int64_t pairs = 0;
  for (size_t i = 0; i < set.size(); ++i) {
    if (set.labels[i] != evalkit::kLive) continue;
    for (size_t j = 0; j < set.size(); ++j) {
      if (set.labels[j] != evalkit::kAttack) continue;
      ++pairs;
      if (set.scores[i] > set.scores[j]) wins += 1;
      else if (set.scores[i] == set.scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

double youden_exhaustive(const evalkit::ScoreSet& set) {
  std::vector<double> cuts(set.scores);
  cuts.push_back(std::numeric_limits<double>::infinity());
  const double n_live = static_cast<double>(set.count(evalkit::kLive));
  const double n_attack = static_cast<double>(set.count(evalkit::kAttack));
  double best = -2;
  for (double c : cuts) {
    double tp = 0, fp = 0;
    for (size_t i = 0; i < set.size(); ++i) {
      if (set.scores[i] < c) continue;
      (set.labels[i] == evalkit::kLive ? tp : fp) += 1;
    }
    best = std::max(best, tp / n_live - fp / n_attack);
  }
  return best;
}

evalkit::ScoreSet random_score_set(Rng& rng, int max_size) {
  evalkit::ScoreSet s;
  const auto n = rng.uniform_int(2, max_size);
  // Coarse grids make ties common.
  const int grid = static_cast<int>(rng.uniform_int(0, 2));
  for (int64_t i = 0; i < n; ++i) {
    double v = rng.uniform();
    if (grid == 1) v = std::round(v * 10) / 10;
    if (grid == 2) v = std::round(v * 3) / 3;
    s.scores.push_back(v);
    s.labels.push_back(i == 0 ? evalkit::kLive : i == 1 ? evalkit::kAttack : static_cast<int>(rng.uniform_int(0, 1)));
  }
  return s;
}

trainer::TrainConfig toy_config(uint64_t seed) {
  trainer::TrainConfig c;
  c.seed = seed;
  c.epochs = 2;
  c.warmup_epochs = 1;
  c.batch_size = 4;
  c.dims.patch_size = 16;
  c.dims.feature_dim = 16;
  c.dims.latent_dim = 8;
  c.dims.hidden_dim = 16;
  c.dims.encoder_width = 4;
  c.gin.noise_dim = 4;
  c.gin.hidden_dim = 8;
  c.bank_capacity = 16;
  c.domain_head_epochs = 3;
  c.write_checkpoints = false;
  return c;
}

datakit::PatchDataset toy_dataset(int64_t n, int patch_size, uint64_t seed) {
  datakit::SynthConfig sc;
  sc.image_size = 64;
  sc.seed = seed;
  const auto palette = datakit::make_palette(sc.domain_palette_count, seed);
  Rng rng(seed);
  datakit::PatchDataset ds(patch_size);
  const size_t plane = static_cast<size_t>(3 * patch_size * patch_size);
  for (int64_t i = 0; i < n; ++i) {
    const auto domain = static_cast<size_t>(rng.uniform_int(0, sc.domain_palette_count - 1));
    auto r = datakit::render_live(sc, palette[domain], rng);
    auto parts = datakit::split_foreground_background(r.image, r.box, patch_size);
    datakit::PatchSample s;
    s.fg.resize(plane);
    s.bg.resize(plane);
    datakit::to_chw(parts.foreground, s.fg.data());
    datakit::to_chw(parts.background, s.bg.data());
    s.id = "toy" + std::to_string(i);
    s.domain_tag = "d" + std::to_string(domain);
    ds.add(std::move(s));
  }
  return ds;
}

BankFuzzResult bank_fuzz(size_t capacity, double delta, int64_t attempts, uint64_t seed, int64_t dim) {
  struct ModelEntry {
    std::vector<double> v;
    uint64_t order;
  };
  BankFuzzResult res;
  liveaug::MemoryBank bank(capacity, delta);
  std::deque<ModelEntry> model;
  uint64_t next = 0;
  Rng rng(seed);
  for (int64_t a = 0; a < attempts; ++a) {
    ++res.attempts;
    // A third of the candidates lean towards a fixed anchor by a random
    // amount, so the bank fills with a cluster and large banks still see
    // high mean similarities; another third perturb a stored entry.
    Tensor c = random_tensor({1, dim}, rng);
    const double mode = rng.uniform();
    if (mode < 1.0 / 3) {
      const double w = rng.uniform(0.0, 4.0);
      for (int64_t j = 0; j < dim; ++j) c[j] += w * (j == 0 ? 1.0 : 0.0);
    } else if (!model.empty() && mode < 2.0 / 3) {
      const auto& base = model[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(model.size()) - 1))].v;
      const double mix = rng.uniform(0.0, 2.0);
      for (int64_t j = 0; j < dim; ++j) c[j] = base[static_cast<size_t>(j)] * mix + c[j] * 0.3;
    }
    c = unit_rows(c);
    const auto cand = c.row(0);
    double m = 0;
    for (const auto& e : model) m += std::abs(cosine(cand, e.v));
    if (!model.empty()) m /= static_cast<double>(model.size());
    const bool borderline = !model.empty() && std::abs(m - delta) < 1e-12;
    const bool expect = model.empty() || m < delta;
    const bool got = bank.try_insert(cand);
    if (!borderline && got != expect) ++res.gate_violations;
    if (got) {
      ++res.inserted;
      if (model.size() == capacity) model.pop_front();
      model.push_back({std::vector<double>(cand.begin(), cand.end()), next++});
      const auto& stored = bank.entries().back();
      if (std::abs(stored.gate - m) > 1e-12 || !(stored.gate < delta)) ++res.gate_violations;
    }
    if (bank.size() > capacity) ++res.capacity_violations;
    if (bank.size() != model.size()) {
      ++res.order_violations;
      continue;
    }
    for (size_t i = 0; i < model.size(); ++i) {
      const auto& e = bank.entries()[i];
      if (e.order != model[i].order || e.value != model[i].v) ++res.order_violations;
      if (i > 0 && !(bank.entries()[i - 1].order < e.order)) ++res.order_violations;
    }
  }
  return res;
}

GinContractResult gin_contracts(int64_t samples, uint64_t seed, int64_t dim, double log_scale) {
  domainaug::GinOptions opt;
  domainaug::GinEncoder enc(dim, opt);
  Rng rng(seed);
  Tensor d({samples, dim});
  for (int64_t i = 0; i < samples; ++i) {
    const double scale = std::exp(rng.uniform(-log_scale, log_scale)), shift = rng.normal(0.0, 3.0);
    for (int64_t j = 0; j < dim; ++j) d.at(i, j) = shift + scale * rng.normal();
  }
  Tensor mu({samples, 1}), sigma({samples, 1});
  for (int64_t i = 0; i < samples; ++i) {
    double m = 0, v = 0;
    for (int64_t j = 0; j < dim; ++j) m += d.at(i, j);
    m /= static_cast<double>(dim);
    for (int64_t j = 0; j < dim; ++j) v += (d.at(i, j) - m) * (d.at(i, j) - m);
    v /= static_cast<double>(dim);
    mu[i] = m;
    sigma[i] = std::sqrt(v + opt.eps);
  }
  GinContractResult r;
  const auto id = enc(Var::constant(d), Var::constant(sigma), Var::constant(mu)).pre_norm.value();
  for (int64_t k = 0; k < d.numel(); ++k) r.identity_max_error = std::max(r.identity_max_error, std::abs(id[k] - d[k]));
  const auto st = enc(Var::constant(d), Var::constant(Tensor({samples, 1}, 1.0)), Var::constant(Tensor({samples, 1})))
                      .pre_norm.value();
  for (int64_t i = 0; i < samples; ++i) {
    double m = 0, v = 0;
    for (int64_t j = 0; j < dim; ++j) m += st.at(i, j);
    m /= static_cast<double>(dim);
    for (int64_t j = 0; j < dim; ++j) v += (st.at(i, j) - m) * (st.at(i, j) - m);
    v /= static_cast<double>(dim);
    r.max_abs_mean = std::max(r.max_abs_mean, std::abs(m));
    r.max_std_error = std::max(r.max_std_error, std::abs(std::sqrt(v) - 1.0));
  }
  return r;
}

std::vector<GradCase> gradient_oracle(uint64_t seed, int probes, double h) {
  constexpr int64_t n = 4, dim = 8;
  Rng rng(seed);
  std::vector<GradCase> out;
  auto input_case = [&](const std::string& name, const std::function<Var(const Var&)>& f, const Tensor& x) {
    out.push_back({name, input_gradient_error(f, x, rng, probes, h)});
  };
  auto param_cases = [&](const std::string& name, nets::ParamGroup& group, const std::function<Var()>& loss) {
    for (auto& p : group.params()) {
      out.push_back({name + " wrt " + group.name() + "/" + p.name, param_gradient_error(loss, p.var, rng, probes, h)});
    }
  };

  const Tensor a = random_tensor({n, dim}, rng), b = random_tensor({n, dim}, rng);
  const auto A = Var::constant(a), B = Var::constant(b);
  Tensor pa({n, 1}), pb({n, 1}), pc({n, 1});
  for (int64_t i = 0; i < n; ++i) {
    pa[i] = rng.uniform(0.2, 0.8);
    pb[i] = rng.uniform(0.2, 0.8);
    pc[i] = rng.uniform(0.2, 0.8);
  }
  const auto PA = Var::constant(pa), PB = Var::constant(pb), PC = Var::constant(pc);

  input_case("loss_domain wrt d_fore", [&](const Var& x) { return ufd::loss_domain(x, B); }, a);
  input_case("loss_domain wrt d_back", [&](const Var& x) { return ufd::loss_domain(A, x); }, b);
  input_case("loss_live wrt l_s", [&](const Var& x) { return ufd::loss_live(x, B); }, a);
  input_case("loss_live wrt l_t", [&](const Var& x) { return ufd::loss_live(A, x); }, b);
  for (auto mode : {ufd::DisMode::signed_cosine, ufd::DisMode::absolute_cosine}) {
    const std::string tag = mode == ufd::DisMode::signed_cosine ? " (signed)" : " (absolute)";
    input_case("loss_dis wrt l_s" + tag, [&](const Var& x) { return ufd::loss_dis(x, B, mode); }, a);
    input_case("loss_dis wrt d_fore" + tag, [&](const Var& x) { return ufd::loss_dis(A, x, mode); }, b);
  }
  // |f - f_rec| has a kink wherever two coordinates meet; keep every
  // coordinate pair 0.2 apart so a 1e-3 probe never crosses one.
  Tensor b_far = a;
  for (auto& v : b_far.storage()) v += (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.2 + std::abs(rng.normal()));
  const auto B_far = Var::constant(b_far);
  for (auto norm : {ufd::RecNorm::l1, ufd::RecNorm::l2}) {
    const std::string tag = norm == ufd::RecNorm::l1 ? " (l1)" : " (l2)";
    input_case("loss_rec wrt f" + tag, [&](const Var& x) { return ufd::loss_rec(x, B_far, norm); }, a);
    input_case("loss_rec wrt f_rec" + tag, [&](const Var& x) { return ufd::loss_rec(A, x, norm); }, b_far);
  }
  input_case("loss_unl wrt l~_s", [&](const Var& x) { return liveaug::loss_unl(x, B); }, a);
  input_case("loss_pres wrt p_live", [&](const Var& x) { return liveaug::loss_pres(x, PB); }, pa);
  input_case("loss_pres wrt p_aug", [&](const Var& x) { return liveaug::loss_pres(PA, x); }, pb);

  liveaug::MemoryBank bank(8, 1.0);
  for (int k = 0; k < 5; ++k) {
    const auto e = random_unit_rows(1, dim, rng);
    bank.try_insert(e.row(0));
  }
  input_case("loss_mine wrt l~", [&](const Var& x) { return liveaug::loss_mine(x, B, bank).value; }, a);
  input_case("loss_mine wrt l~_M", [&](const Var& x) { return liveaug::loss_mine(A, x, bank).value; }, b);
  input_case("loss_adv wrt p", [&](const Var& x) { return domainaug::loss_adv(x); }, pa);
  input_case("loss_d wrt p", [&](const Var& x) { return domainaug::domain_entropy(x); }, pa);
  input_case("loss_feature_enhanced wrt p_rec",
             [&](const Var& x) { return trainer::loss_feature_enhanced(x, PB, PC); }, pa);
  input_case("loss_feature_enhanced wrt p_hat",
             [&](const Var& x) { return trainer::loss_feature_enhanced(PA, x, PC); }, pb);
  input_case("loss_feature_enhanced wrt p_tilde",
             [&](const Var& x) { return trainer::loss_feature_enhanced(PA, PB, x); }, pc);

  // Parameter paths run through small random networks. The heads start at
  // zero weight, which would make every upstream gradient vanish.
  nets::NetDims dims;
  dims.feature_dim = 16;
  dims.latent_dim = dim;
  dims.hidden_dim = 16;
  nets::Networks net(dims, rng);
  for (auto* g : {&net.live_head.params(), &net.domain_head.params()}) {
    for (auto& p : g->params()) p.var.mutable_value() = random_tensor(p.var.shape(), rng);
  }
  liveaug::Adaptor phi(dim, 0.3);
  domainaug::GinOptions gopt;
  gopt.noise_dim = 4;
  gopt.hidden_dim = 8;
  domainaug::ConditionGenerator gen(dim, gopt, rng);
  domainaug::GinEncoder gin(dim, gopt);
  for (auto& p : gin.params().params()) {
    for (auto& v : p.var.mutable_value().storage()) v += rng.normal(0.0, 0.2);
  }
  const auto noise = liveaug::AdaptorNoise::draw(n, dim, rng);
  const Tensor n_alpha = random_tensor({n, gopt.noise_dim}, rng), n_beta = random_tensor({n, gopt.noise_dim}, rng);
  const auto l = Var::constant(unit_rows(a)), d = Var::constant(unit_rows(b));
  const uint64_t mask_seed = rng.next_u64();

  auto l_tilde = [&] { return phi(l, noise).output; };
  auto d_hat = [&] {
    const auto c = gen(n_alpha, n_beta);
    return gin(d, c.alpha, c.beta).output;
  };
  auto p_rec = [&](const Var& live, const Var& domain) {
    return net.live_head(net.live_extractor(net.reconstructor(live, domain)));
  };
  param_cases("loss_unl", phi.params(), [&] { return liveaug::loss_unl(l_tilde(), l); });
  param_cases("loss_pres", phi.params(), [&] { return liveaug::loss_pres(p_rec(l, d), p_rec(l_tilde(), d)); });
  param_cases("loss_mine", phi.params(), [&] {
    Rng mask_rng(mask_seed);
    const auto lt = l_tilde();
    return liveaug::loss_mine(lt, liveaug::mask_feature(lt, 0.25, mask_rng).output, bank).value;
  });
  param_cases("loss_feature_enhanced", phi.params(),
              [&] { return trainer::loss_feature_enhanced(p_rec(l, d), p_rec(l, d), p_rec(l_tilde(), d)); });
  for (auto* g : {&gen.params(), &gin.params()}) {
    param_cases("loss_adv", *g, [&] { return domainaug::loss_adv(p_rec(l, d_hat())); });
    param_cases("loss_d", *g, [&] { return domainaug::domain_entropy(net.domain_head(d_hat())); });
    param_cases("loss_feature_enhanced", *g,
                [&] { return trainer::loss_feature_enhanced(p_rec(l, d), p_rec(l, d_hat()), p_rec(l, d)); });
  }
  return out;
}

namespace {

std::set<std::string> changed_groups(const std::map<std::string, std::vector<Tensor>>& before,
                                     const trainer::ModelState& s) {
  std::set<std::string> out;
  for (const auto& name : trainer::group_names()) {
    if (!s.group(name).bitwise_equal(before.at(name))) out.insert(name);
  }
  return out;
}

}  // namespace

std::map<int, std::set<std::string>> stage_isolation_audit(uint64_t seed) {
  auto cfg = toy_config(seed);
  cfg.warmup_epochs = 0;
  cfg.epochs = 1;
  const auto data = toy_dataset(8, static_cast<int>(cfg.dims.patch_size), seed + 1);
  trainer::ModelState s(cfg);
  trainer::pretrain_domain_head(s, data);
  std::map<int, std::set<std::string>> changed;
  auto before = s.snapshot();
  trainer::EpochOptions o;
  o.observer = [&](int stage, const trainer::ModelState& st) {
    changed[stage] = changed_groups(before, st);
    before = st.snapshot();
  };
  trainer::train_epoch(s, data, o);
  return changed;
}

const std::map<int, std::set<std::string>>& designated_stage_groups() {
  static const std::map<int, std::set<std::string>> g{
      {1, {"E", "E_l", "E_d", "D"}}, {2, {"phi"}}, {3, {"G", "E_GIN"}}, {4, {"E_l", "C_l"}}};
  return g;
}

// ---------------------------------------------------------------- examples

namespace {

Var rows(int64_t n, int64_t d, std::initializer_list<double> v) { return Var::constant(Tensor::matrix(n, d, v)); }
Var probs(std::initializer_list<double> v) {
  return Var::constant(Tensor::matrix(static_cast<int64_t>(v.size()), 1, v));
}

bool near(double got, double want, std::string& detail, double tol = 1e-6) {
  std::ostringstream o;
  o.precision(12);
  o << "got " << got << ", want " << want;
  detail = o.str();
  return std::abs(got - want) <= tol;
}

bool truth(bool ok, std::string& detail, const std::string& what) {
  detail = what;
  return ok;
}

const double kLn2 = std::numbers::ln2;
const double kHi = 1.0 - nets::kProbClamp, kLo = nets::kProbClamp;

void add(std::vector<Example>& v, const std::string& module, const std::string& name,
         std::function<bool(std::string&)> fn) {
  v.push_back({module, name, std::move(fn)});
}

void ufd_examples(std::vector<Example>& v) {
  const std::string m = "ufd";
  add(v, m, "loss_domain: identical rows give 0", [](std::string& d) {
    auto a = rows(2, 3, {1, 2, 3, -1, 0, 4});
    return near(ufd::loss_domain(a, a).item(), 0.0, d);
  });
  add(v, m, "loss_domain: orthogonal rows give 1",
      [](std::string& d) { return near(ufd::loss_domain(rows(1, 2, {1, 0}), rows(1, 2, {0, 1})).item(), 1.0, d); });
  add(v, m, "loss_domain: {(e1,e1),(e1,-e1)} gives 1", [](std::string& d) {
    return near(ufd::loss_domain(rows(2, 2, {1, 0, 1, 0}), rows(2, 2, {1, 0, -1, 0})).item(), 1.0, d);
  });
  add(v, m, "loss_live: equal views give 0", [](std::string& d) {
    auto a = rows(2, 2, {0.3, 0.4, -1, 2});
    return near(ufd::loss_live(a, a).item(), 0.0, d);
  });
  add(v, m, "loss_live: antipodal views give 2",
      [](std::string& d) { return near(ufd::loss_live(rows(1, 2, {1, 1}), rows(1, 2, {-1, -1})).item(), 2.0, d); });
  add(v, m, "loss_live: (e1,e2) gives 1",
      [](std::string& d) { return near(ufd::loss_live(rows(1, 2, {1, 0}), rows(1, 2, {0, 1})).item(), 1.0, d); });
  add(v, m, "loss_dis: orthogonal rows give 0",
      [](std::string& d) { return near(ufd::loss_dis(rows(1, 2, {1, 0}), rows(1, 2, {0, 1})).item(), 0.0, d); });
  add(v, m, "loss_dis: identical rows give 1", [](std::string& d) {
    auto a = rows(1, 3, {1, 2, 2});
    return near(ufd::loss_dis(a, a).item(), 1.0, d);
  });
  add(v, m, "loss_dis: {(e1,e1),(e1,-e1)} gives 0", [](std::string& d) {
    return near(ufd::loss_dis(rows(2, 2, {1, 0, 1, 0}), rows(2, 2, {1, 0, -1, 0})).item(), 0.0, d);
  });
  add(v, m, "loss_rec: f = f_rec gives 0", [](std::string& d) {
    auto a = rows(1, 3, {1, -2, 3});
    return near(ufd::loss_rec(a, a).item(), 0.0, d);
  });
  add(v, m, "loss_rec: zeros against ones gives 1", [](std::string& d) {
    return near(ufd::loss_rec(rows(1, 4, {0, 0, 0, 0}), rows(1, 4, {1, 1, 1, 1})).item(), 1.0, d);
  });
  add(v, m, "loss_rec: (1,2) against (0,4) gives 1.5",
      [](std::string& d) { return near(ufd::loss_rec(rows(1, 2, {1, 2}), rows(1, 2, {0, 4})).item(), 1.5, d); });
  auto scalar = [](double x) { return Var::constant(Tensor::scalar(x)); };
  add(v, m, "ufd_total: all zero gives 0", [scalar](std::string& d) {
    return near(ufd::ufd_total(scalar(0), scalar(0), scalar(0), scalar(0), 1e-3).total.item(), 0.0, d);
  });
  add(v, m, "ufd_total: (1,1,0,100) with lambda1 1e-3 gives 2.1", [scalar](std::string& d) {
    return near(ufd::ufd_total(scalar(1), scalar(1), scalar(0), scalar(100), 1e-3).total.item(), 2.1, d);
  });
  add(v, m, "ufd_total: lambda1 0 ignores l_rec", [scalar](std::string& d) {
    const double a = ufd::ufd_total(scalar(0.3), scalar(0.2), scalar(-0.1), scalar(5), 0.0).total.item();
    const double b = ufd::ufd_total(scalar(0.3), scalar(0.2), scalar(-0.1), scalar(500), 0.0).total.item();
    return near(a, b, d, 0.0);
  });
}

void liveaug_examples(std::vector<Example>& v) {
  const std::string m = "liveaug";
  add(v, m, "adapt: zero noise std and identity W return l", [](std::string& d) {
    Rng rng(1);
    auto l = Var::constant(random_unit_rows(3, 4, rng));
    auto noise = liveaug::AdaptorNoise::draw(3, 4, rng);
    auto out = liveaug::affine_noise(l, Var::constant(nets::identity_matrix(4)), Var::constant(Tensor({4})),
                                     Var::constant(Tensor({4})), noise);
    double err = 0;
    for (int64_t k = 0; k < 12; ++k) err = std::max(err, std::abs(out.value()[k] - l.value()[k]));
    return near(err, 0.0, d);
  });
  add(v, m, "adapt: fixed rng seed gives identical l~", [](std::string& d) {
    liveaug::Adaptor phi(6, 0.3);
    Rng a(9), b(9), g(2);
    auto l = Var::constant(random_unit_rows(4, 6, g));
    return truth(phi(l, a).output.value() == phi(l, b).output.value(), d, "outputs must match bitwise");
  });
  add(v, m, "adapt: L=2, b_c=(1,0), eps2=(0.5,.) gives l + (0.5,0)", [](std::string& d) {
    liveaug::AdaptorNoise noise{Tensor({1, 2}), Tensor::matrix(1, 2, {0.5, -0.7})};
    auto l = rows(1, 2, {0.6, 0.8});
    auto pre = liveaug::affine_noise(l, Var::constant(nets::identity_matrix(2)), Var::constant(Tensor({2})),
                                     Var::constant(Tensor::matrix(1, 2, {1, 0}).reshaped({2})), noise)
                   .value();
    std::string d2;
    const bool ok = near(pre[0], 1.1, d) && near(pre[1], 0.8, d2);
    if (!d2.empty()) d += "; " + d2;
    return ok;
  });
  add(v, m, "loss_unl: l~ = l_t gives 1", [](std::string& d) {
    auto a = rows(1, 2, {0.6, 0.8});
    return near(liveaug::loss_unl(a, a).item(), 1.0, d);
  });
  add(v, m, "loss_unl: orthogonal gives 0",
      [](std::string& d) { return near(liveaug::loss_unl(rows(1, 2, {1, 0}), rows(1, 2, {0, 1})).item(), 0.0, d); });
  add(v, m, "loss_unl: antipodal gives -1",
      [](std::string& d) { return near(liveaug::loss_unl(rows(1, 2, {1, 0}), rows(1, 2, {-1, 0})).item(), -1.0, d); });
  add(v, m, "loss_pres: p_live -> 1, p_aug -> 0 gives 0+", [](std::string& d) {
    const double x = liveaug::loss_pres(probs({kHi}), probs({kLo})).item();
    return truth(x > 0 && x < 1e-6, d, "loss " + std::to_string(x));
  });
  add(v, m, "loss_pres: (0.5, 0.5) gives 2 ln 2",
      [](std::string& d) { return near(liveaug::loss_pres(probs({0.5}), probs({0.5})).item(), 2 * kLn2, d); });
  add(v, m, "loss_pres: (0.9, 0.1) gives 0.2107", [](std::string& d) {
    const double x = liveaug::loss_pres(probs({0.9}), probs({0.1})).item();
    std::string d2;
    const bool ok = near(x, -2 * std::log(0.9), d) && near(x, 0.2107, d2, 5e-5);
    return ok;
  });
  add(v, m, "bank: empty bank accepts", [](std::string& d) {
    liveaug::MemoryBank b(4, 0.5);
    const std::vector<double> e1{1, 0};
    return truth(b.try_insert(e1) && b.size() == 1, d, "first insertion must succeed");
  });
  add(v, m, "bank: {e1} rejects e1 at delta 0.5", [](std::string& d) {
    liveaug::MemoryBank b(4, 0.5);
    const std::vector<double> e1{1, 0};
    b.try_insert(e1);
    return truth(!b.try_insert(e1) && b.size() == 1, d, "duplicate must be rejected");
  });
  add(v, m, "bank: {e1,e2} candidate (e1+e2)/sqrt2 rejected at 0.5, accepted at 0.8", [](std::string& d) {
    const std::vector<double> e1{1, 0}, e2{0, 1}, c{std::sqrt(0.5), std::sqrt(0.5)};
    liveaug::MemoryBank lo(4, 0.5), hi(4, 0.8);
    lo.try_insert(e1);
    lo.try_insert(e2);
    hi.restore(lo.entries(), lo.next_order());
    std::string d2;
    const bool gate = near(lo.gate_value(c), std::sqrt(0.5), d2);
    const bool ok = gate && !lo.try_insert(c) && hi.try_insert(c);
    d = "gate " + d2;
    return ok;
  });
  add(v, m, "mask_feature: ratio 0 returns l~", [](std::string& d) {
    Rng g(3), r(4);
    auto l = Var::constant(random_unit_rows(3, 8, g));
    auto out = liveaug::mask_feature(l, 0.0, r).output.value();
    double err = 0;
    for (int64_t k = 0; k < out.numel(); ++k) err = std::max(err, std::abs(out[k] - l.value()[k]));
    return near(err, 0.0, d, 1e-12);
  });
  add(v, m, "mask_feature: L=64, ratio 0.25 zeroes exactly 16", [](std::string& d) {
    Rng g(5), r(6);
    auto out = liveaug::mask_feature(Var::constant(random_unit_rows(5, 64, g)), 0.25, r);
    bool ok = true;
    for (int64_t i = 0; i < 5; ++i) {
      int zeros = 0;
      for (int64_t j = 0; j < 64; ++j) zeros += out.mask.at(i, j) == 0.0 && out.output.value().at(i, j) == 0.0;
      ok = ok && zeros == 16;
    }
    return truth(ok, d, "each row must have 16 zeroed coordinates");
  });
  add(v, m, "mask_feature: fixed seed gives identical mask", [](std::string& d) {
    Rng g(5), a(8), b(8);
    auto l = Var::constant(random_unit_rows(5, 16, g));
    return truth(liveaug::mask_feature(l, 0.25, a).mask == liveaug::mask_feature(l, 0.25, b).mask, d,
                 "masks must match");
  });
  add(v, m, "loss_mine: empty bank gives 0 and is skipped", [](std::string& d) {
    liveaug::MemoryBank b(4, 0.5);
    auto l = rows(1, 2, {1, 0});
    auto r = liveaug::loss_mine(l, l, b);
    return near(r.value.item(), 0.0, d) && r.skipped;
  });
  add(v, m, "loss_mine: bank {v perp l~}, l~_M = l~ gives -log(e/(e+1))", [](std::string& d) {
    liveaug::MemoryBank b(4, 0.5);
    b.try_insert(std::vector<double>{0, 1});
    auto l = rows(1, 2, {1, 0});
    return near(liveaug::loss_mine(l, l, b).value.item(), -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)), d) &&
           near(liveaug::loss_mine(l, l, b).value.item(), 0.3133, d, 5e-5);
  });
  add(v, m, "loss_mine: bank {l~}, l~_M = l~ gives ln 2", [](std::string& d) {
    liveaug::MemoryBank b(4, 0.5);
    b.try_insert(std::vector<double>{0.6, 0.8});
    auto l = rows(1, 2, {0.6, 0.8});
    return near(liveaug::loss_mine(l, l, b).value.item(), kLn2, d);
  });
  auto scalar = [](double x) { return Var::constant(Tensor::scalar(x)); };
  add(v, m, "liveaug_total: all zero gives 0", [scalar](std::string& d) {
    return near(liveaug::liveaug_total(scalar(0), scalar(0), scalar(0), 0.1).item(), 0.0, d);
  });
  add(v, m, "liveaug_total: (0.5,1,2), lambda2 0.1 gives 1.7", [scalar](std::string& d) {
    return near(liveaug::liveaug_total(scalar(0.5), scalar(1), scalar(2), 0.1).item(), 1.7, d);
  });
  add(v, m, "liveaug_total: lambda2 0 ignores l_mine", [scalar](std::string& d) {
    return near(liveaug::liveaug_total(scalar(0.5), scalar(1), scalar(2), 0.0).item(),
                liveaug::liveaug_total(scalar(0.5), scalar(1), scalar(200), 0.0).item(), d, 0.0);
  });
}

void domainaug_examples(std::vector<Example>& v) {
  const std::string m = "domainaug";
  add(v, m, "gin: forced (sigma, mu) recovers d exactly", [](std::string& d) {
    const auto r = gin_contracts(20, 11, 8);
    return near(r.identity_max_error, 0.0, d);
  });
  add(v, m, "gin: forced (1, 0) standardizes", [](std::string& d) {
    const auto r = gin_contracts(20, 12, 8, 0.0);
    return truth(r.max_abs_mean <= 1e-5 && r.max_std_error <= 1e-5, d,
                 "mean " + std::to_string(r.max_abs_mean) + ", std err " + std::to_string(r.max_std_error));
  });
  add(v, m, "gin: d=(1,3), (alpha,beta)=(2,5) gives (3,7)", [](std::string& d) {
    domainaug::GinOptions opt;
    opt.eps = 0;  // sigma is exactly 1 here
    domainaug::GinEncoder enc(2, opt);
    auto pre = enc(rows(1, 2, {1, 3}), probs({2}), probs({5})).pre_norm.value();
    std::string d2;
    const bool ok = near(pre[0], 3.0, d) && near(pre[1], 7.0, d2);
    return ok;
  });
  add(v, m, "loss_adv: p -> 0 gives 0+", [](std::string& d) {
    const double x = domainaug::loss_adv(probs({kLo, kLo})).item();
    return truth(x > 0 && x < 1e-6, d, std::to_string(x));
  });
  add(v, m, "loss_adv: p = 0.5 gives ln 2",
      [](std::string& d) { return near(domainaug::loss_adv(probs({0.5})).item(), kLn2, d); });
  add(v, m, "loss_adv: p = 0.9 gives -ln 0.1", [](std::string& d) {
    return near(domainaug::loss_adv(probs({0.9})).item(), -std::log(0.1), d) &&
           near(domainaug::loss_adv(probs({0.9})).item(), 2.3026, d, 5e-5);
  });
  add(v, m, "loss_d: p -> 1 gives 0+", [](std::string& d) {
    const double x = domainaug::domain_entropy(probs({kHi})).item();
    return truth(x > 0 && x < 1e-6, d, std::to_string(x));
  });
  add(v, m, "loss_d: p = 0.5 gives ln 2",
      [](std::string& d) { return near(domainaug::domain_entropy(probs({0.5})).item(), kLn2, d); });
  add(v, m, "loss_d: p = 1/e gives 1",
      [](std::string& d) { return near(domainaug::domain_entropy(probs({std::exp(-1.0)})).item(), 1.0, d); });
  auto scalar = [](double x) { return Var::constant(Tensor::scalar(x)); };
  add(v, m, "domainaug_total: (0,0) gives 0",
      [scalar](std::string& d) { return near(domainaug::domainaug_total(scalar(0), scalar(0)).item(), 0.0, d); });
  add(v, m, "domainaug_total: (0.7,0.3) gives 1",
      [scalar](std::string& d) { return near(domainaug::domainaug_total(scalar(0.7), scalar(0.3)).item(), 1.0, d); });
  add(v, m, "domainaug_total: commutes", [scalar](std::string& d) {
    return near(domainaug::domainaug_total(scalar(0.25), scalar(1.5)).item(),
                domainaug::domainaug_total(scalar(1.5), scalar(0.25)).item(), d, 0.0);
  });
}

void trainer_examples(std::vector<Example>& v) {
  const std::string m = "trainer";
  add(v, m, "loss_feature_enhanced: (1-,1-,0+) gives 0+", [](std::string& d) {
    const double x = trainer::loss_feature_enhanced(probs({kHi}), probs({kHi}), probs({kLo})).item();
    return truth(x > 0 && x < 1e-6, d, std::to_string(x));
  });
  add(v, m, "loss_feature_enhanced: (0.5,0.5,0.5) gives 3 ln 2", [](std::string& d) {
    return near(trainer::loss_feature_enhanced(probs({0.5}), probs({0.5}), probs({0.5})).item(), 3 * kLn2, d);
  });
  add(v, m, "loss_feature_enhanced: (0.9,0.9,0.1) gives 0.3161", [](std::string& d) {
    const double x = trainer::loss_feature_enhanced(probs({0.9}), probs({0.9}), probs({0.1})).item();
    return near(x, -3 * std::log(0.9), d) && near(x, 0.3161, d, 5e-5);
  });
  add(v, m, "train_epoch: stage isolation audit passes", [](std::string& d) {
    const auto changed = stage_isolation_audit(3);
    std::ostringstream o;
    for (const auto& [stage, groups] : changed) {
      o << "stage " << stage << ":";
      for (const auto& g : groups) o << ' ' << g;
      o << "; ";
    }
    d = o.str();
    return changed == designated_stage_groups();
  });
  add(v, m, "train_epoch: all learning rates 0 leave parameters bit-identical", [](std::string& d) {
    auto cfg = toy_config(4);
    cfg.warmup_epochs = 0;
    cfg.default_lr = 0;
    cfg.learning_rates.clear();
    const auto data = toy_dataset(8, 16, 5);
    trainer::ModelState s(cfg);
    trainer::pretrain_domain_head(s, data);
    const auto before = s.snapshot();
    trainer::train_epoch(s, data);
    std::string moved;
    for (const auto& name : trainer::group_names()) {
      if (!s.group(name).bitwise_equal(before.at(name))) moved += " " + name;
    }
    return truth(moved.empty(), d, "changed:" + moved);
  });
  add(v, m, "train_epoch: fixed seed gives identical records", [](std::string& d) {
    auto cfg = toy_config(6);
    cfg.warmup_epochs = 0;
    const auto data = toy_dataset(8, 16, 7);
    std::string rows[2];
    for (auto& row : rows) {
      trainer::ModelState s(cfg);
      trainer::pretrain_domain_head(s, data);
      row = trainer::history_row(trainer::train_epoch(s, data));
    }
    d = rows[0] + " vs " + rows[1];
    return rows[0] == rows[1];
  });
  add(v, m, "fit: epochs = warmup + 1 runs exactly one full epoch", [](std::string& d) {
    auto cfg = toy_config(8);
    cfg.warmup_epochs = 2;
    cfg.epochs = 3;
    const auto r = trainer::fit(cfg, toy_dataset(8, 16, 9));
    int full = 0;
    for (const auto& rec : r.records) full += !rec.warmup && rec.stages == std::vector<int>{1, 2, 3, 4};
    d = std::to_string(full) + " full epochs of " + std::to_string(r.records.size());
    return full == 1 && r.records.size() == 3;
  });
  add(v, m, "fit: resume from epoch k reproduces epoch k+1", [](std::string& d) {
    TempDir dir("resume");
    auto cfg = toy_config(10);
    cfg.epochs = 3;
    cfg.write_checkpoints = true;
    cfg.output_dir = dir / "a";
    const auto data = toy_dataset(8, 16, 11);
    const auto full = trainer::fit(cfg, data);
    cfg.output_dir = dir / "b";
    trainer::FitOptions o;
    o.resume_from = trainer::checkpoint_path(dir / "a", 2);
    const auto resumed = trainer::fit(cfg, data, o);
    if (resumed.records.size() != 1) return truth(false, d, "resume ran the wrong number of epochs");
    const auto a = trainer::history_row(full.records.back()), b = trainer::history_row(resumed.records.back());
    d = a + " vs " + b;
    return a == b && read_file(full.final_checkpoint) == read_file(resumed.final_checkpoint);
  });
  add(v, m, "fit: history has exactly T_max rows", [](std::string& d) {
    TempDir dir("hist");
    auto cfg = toy_config(12);
    cfg.epochs = 3;
    cfg.output_dir = dir.path();
    const auto r = trainer::fit(cfg, toy_dataset(8, 16, 13));
    std::ifstream in(r.history_path);
    std::string line;
    int n = -1;  // header
    while (std::getline(in, line)) n += !line.empty();
    d = std::to_string(n) + " rows";
    return n == 3;
  });
  add(v, m, "checkpoint: save, load, save is byte-identical", [](std::string& d) {
    TempDir dir("ckpt");
    auto cfg = toy_config(14);
    const auto r = trainer::fit(cfg, toy_dataset(8, 16, 15));
    trainer::save_checkpoint(*r.state, dir / "one");
    trainer::save_checkpoint(*trainer::load_checkpoint(dir / "one"), dir / "two");
    return truth(read_file(dir / "one") == read_file(dir / "two"), d, "files differ");
  });
  add(v, m, "checkpoint: wrong L gives a dimension error", [](std::string& d) {
    TempDir dir("ckptdim");
    auto cfg = toy_config(16);
    trainer::ModelState s(cfg);
    trainer::save_checkpoint(s, dir / "c");
    auto wrong = cfg.dims;
    wrong.latent_dim = 9;
    try {
      trainer::load_checkpoint(dir / "c", wrong);
    } catch (const DimensionError& e) {
      d = e.what();
      return true;
    }
    d = "no DimensionError";
    return false;
  });
  add(v, m, "checkpoint: post-load metrics equal pre-save metrics", [](std::string& d) {
    TempDir dir("ckptmetrics");
    auto cfg = toy_config(18);
    auto data = toy_dataset(12, 16, 19);
    const auto r = trainer::fit(cfg, data);
    auto set_for = [&](const trainer::ModelState& s) {
      auto set = evalkit::score_dataset(s, data, "test");
      for (size_t i = 0; i < set.size(); ++i) set.labels[i] = i % 2 ? evalkit::kLive : evalkit::kAttack;
      return evalkit::evaluate(set, set);
    };
    const auto before = set_for(*r.state);
    trainer::save_checkpoint(*r.state, dir / "c");
    const auto after = set_for(*trainer::load_checkpoint(dir / "c"));
    d = "auc " + std::to_string(before.auc) + " vs " + std::to_string(after.auc);
    return before.auc == after.auc && before.threshold == after.threshold && before.acer == after.acer &&
           before.tp == after.tp && before.fp == after.fp;
  });
}

}  // namespace

std::vector<Example> worked_examples(const std::string& module) {
  std::vector<Example> v;
  if (module == "ufd") ufd_examples(v);
  else if (module == "liveaug") liveaug_examples(v);
  else if (module == "domainaug") domainaug_examples(v);
  else if (module == "trainer") trainer_examples(v);
  else throw InputError("no worked examples for module " + module);
  return v;
}

}  // namespace ufda::testkit
