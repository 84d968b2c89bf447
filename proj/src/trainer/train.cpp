#include "ufda/trainer/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ufda/core/error.hpp"
#include "ufda/domainaug/losses.hpp"
#include "ufda/liveaug/losses.hpp"
#include "ufda/nets/prob_losses.hpp"
#include "ufda/trainer/checkpoint.hpp"
#include "ufda/ufd/losses.hpp"

namespace ufda::trainer {

using ag::Var;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags under (seed, epoch).
enum : uint64_t { kBatchStream = 1, kStage2Stream = 2, kStage3Stream = 3, kStage4Stream = 4, kHarvestStream = 5 };

Rng stream(const ModelState& s, uint64_t tag) { return Rng::derive(s.config.seed, {static_cast<uint64_t>(s.epoch), tag}); }

datakit::BatchOptions batch_options(const TrainConfig& c) { return {c.batch_size, c.mask_ratio}; }

const char* stage_name(int stage) {
  switch (stage) {
    case 1: return "ufd";
    case 2: return "liveaug";
    case 3: return "domainaug";
    default: return "feature-enhanced";
  }
}

void check_finite(const Var& v, int stage, int64_t batch, const char* what) {
  if (!v.value().all_finite()) {
    throw NumericError("stage " + std::to_string(stage) + " (" + stage_name(stage) + "), batch " +
                       std::to_string(batch) + ": non-finite " + what);
  }
}

// Step with the stage/batch attached to optimizer failures.
void step(ModelState& s, const std::vector<std::string>& groups, int stage, int64_t batch) {
  try {
    s.step(groups);
  } catch (const NumericError& e) {
    throw NumericError("stage " + std::to_string(stage) + " (" + stage_name(stage) + "), batch " +
                       std::to_string(batch) + ": " + e.what());
  }
}

Tensor stack3(const Tensor& a, const Tensor& b, const Tensor& c) {
  Shape shape = a.shape();
  shape[0] = a.dim(0) + b.dim(0) + c.dim(0);
  Tensor out(shape);
  auto* dst = out.data();
  for (const Tensor* t : {&a, &b, &c}) dst = std::copy(t->data(), t->data() + t->numel(), dst);
  return out;
}

struct FeatureBatch {
  Tensor f_s;  // E(x~_s), [B, F]
  Tensor f_t;  // E(x~_t), [B, F]
};

struct Mean {
  double sum = 0;
  int64_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double get() const { return n ? sum / static_cast<double>(n) : kNaN; }
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void log_step(const EpochOptions& o, const ModelState& s, int stage, int64_t batch, double loss) {
  if (o.step_log) o.step_log->write(s.epoch + 1, stage, batch, loss);
}

void stage_ufd(ModelState& s, const datakit::PatchDataset& data, const EpochOptions& o, EpochRecord& rec) {
  const auto& cfg = s.config;
  s.set_trainable({"E", "E_l", "E_d", "D"});
  datakit::BatchIterator it(data, batch_options(cfg), stream(s, kBatchStream));
  Mean dom, live, dis, recn, total;
  int64_t b = 0;
  while (auto batch = it.next()) {
    const int64_t n = batch->size();
    s.zero_grad();
    auto f = s.nets.encoder(Var::constant(stack3(batch->fg_masked_s, batch->fg_masked_t, batch->bg)));
    auto f_s = ag::slice_rows(f, 0, n);
    auto f_t = ag::slice_rows(f, n, 2 * n);
    auto f_b = ag::slice_rows(f, 2 * n, 3 * n);
    auto l = s.nets.live_extractor(ag::concat_rows({f_s, f_t}));
    auto d = s.nets.domain_extractor(ag::concat_rows({f_s, f_b}));
    auto l_s = ag::slice_rows(l, 0, n);
    auto l_t = ag::slice_rows(l, n, 2 * n);
    auto d_f = ag::slice_rows(d, 0, n);
    auto d_b = ag::slice_rows(d, n, 2 * n);
    auto f_rec = s.nets.reconstructor(l_s, d_f);
    auto losses = ufd::ufd_total(ufd::loss_domain(d_f, d_b), ufd::loss_live(l_s, l_t),
                                 ufd::loss_dis(l_s, d_f, cfg.dis_mode), ufd::loss_rec(f_s, f_rec, cfg.rec_norm),
                                 cfg.lambda1);
    check_finite(losses.total, 1, b, "UFD loss");
    ag::backward(losses.total);
    step(s, {"E", "E_l", "E_d", "D"}, 1, b);
    const auto r = losses.report();
    dom.add(r.l_domain);
    live.add(r.l_live);
    dis.add(r.l_dis);
    recn.add(r.l_rec);
    total.add(r.total);
    log_step(o, s, 1, b, r.total);
    ++b;
  }
  rec.batches = b;
  rec.l_domain = dom.get();
  rec.l_live = live.get();
  rec.l_dis = dis.get();
  rec.l_rec = recn.get();
  rec.ufd_total = total.get();
}

// E is fixed after stage 1, so stages 2-4 reuse its features on the same stream.
std::vector<FeatureBatch> encode_stream(ModelState& s, const datakit::PatchDataset& data) {
  s.set_trainable({});
  datakit::BatchIterator it(data, batch_options(s.config), stream(s, kBatchStream));
  std::vector<FeatureBatch> out;
  while (auto batch = it.next()) {
    const int64_t n = batch->size();
    Shape two = batch->fg_masked_s.shape();
    two[0] = 2 * n;
    Tensor both(two);
    std::copy_n(batch->fg_masked_s.data(), batch->fg_masked_s.numel(), both.data());
    std::copy_n(batch->fg_masked_t.data(), batch->fg_masked_t.numel(), both.data() + batch->fg_masked_s.numel());
    auto f = s.nets.encoder(Var::constant(std::move(both)));
    out.push_back({ag::slice_rows(f, 0, n).value(), ag::slice_rows(f, n, 2 * n).value()});
  }
  return out;
}

void insert_candidates(ModelState& s, const Tensor& l_tilde, EpochRecord& rec) {
  const int64_t rows = s.config.bank_insert == BankInsertMode::per_batch ? 1 : l_tilde.rows();
  for (int64_t r = 0; r < rows; ++r) {
    if (s.bank.try_insert(l_tilde.row(r))) ++rec.bank_inserts;
  }
}

void stage_liveaug(ModelState& s, const std::vector<FeatureBatch>& feats, const EpochOptions& o, EpochRecord& rec) {
  const auto& cfg = s.config;
  s.set_trainable({"phi"});
  Rng rng = stream(s, kStage2Stream);
  Mean unl, pres, mine, total;
  for (size_t i = 0; i < feats.size(); ++i) {
    const auto b = static_cast<int64_t>(i);
    s.zero_grad();
    auto f_s = Var::constant(feats[i].f_s);
    auto l_s = s.nets.live_extractor(f_s);
    auto l_t = s.nets.live_extractor(Var::constant(feats[i].f_t));
    auto d_f = s.nets.domain_extractor(f_s);
    auto l_tilde = s.adaptor(l_s, rng).output;
    auto p_live = s.nets.live_head(s.nets.live_extractor(s.nets.reconstructor(l_s, d_f)));
    auto p_aug = s.nets.live_head(s.nets.live_extractor(s.nets.reconstructor(l_tilde, d_f)));
    auto masked = liveaug::mask_feature(l_tilde, cfg.feature_mask_ratio, rng);
    auto l_unl = liveaug::loss_unl(l_tilde, l_t);
    auto l_pres = liveaug::loss_pres(p_live, p_aug);
    auto l_mine = liveaug::loss_mine(l_tilde, masked.output, s.bank);
    auto loss = liveaug::liveaug_total(l_unl, l_pres, l_mine.value, cfg.lambda2);
    check_finite(loss, 2, b, "LiveAug loss");
    ag::backward(loss);
    step(s, {"phi"}, 2, b);
    insert_candidates(s, l_tilde.value(), rec);
    unl.add(l_unl.item());
    pres.add(l_pres.item());
    mine.add(l_mine.value.item());
    total.add(loss.item());
    if (l_mine.skipped) ++rec.mine_skipped;
    log_step(o, s, 2, b, loss.item());
  }
  rec.l_unl = unl.get();
  rec.l_pres = pres.get();
  rec.l_mine = mine.get();
  rec.liveaug_total = total.get();
}

void stage_domainaug(ModelState& s, const std::vector<FeatureBatch>& feats, const EpochOptions& o,
                     EpochRecord& rec) {
  s.set_trainable({"G", "E_GIN"});
  Rng rng = stream(s, kStage3Stream);
  Mean adv, ld, total;
  for (size_t i = 0; i < feats.size(); ++i) {
    const auto b = static_cast<int64_t>(i);
    s.zero_grad();
    auto f_s = Var::constant(feats[i].f_s);
    auto l_s = s.nets.live_extractor(f_s);
    auto d_f = s.nets.domain_extractor(f_s);
    auto d_hat = domainaug::gin_forward(s.gin, s.generator, d_f, rng).output;
    auto p = s.nets.live_head(s.nets.live_extractor(s.nets.reconstructor(l_s, d_hat)));
    auto l_adv = domainaug::loss_adv(p);
    auto l_d = domainaug::loss_domain_entropy(s.nets.domain_head, d_hat);
    auto loss = domainaug::domainaug_total(l_adv, l_d);
    check_finite(loss, 3, b, "DomainAug loss");
    ag::backward(loss);
    step(s, {"G", "E_GIN"}, 3, b);
    adv.add(l_adv.item());
    ld.add(l_d.item());
    total.add(loss.item());
    log_step(o, s, 3, b, loss.item());
  }
  rec.l_adv = adv.get();
  rec.l_d = ld.get();
  rec.domainaug_total = total.get();
}

void stage_enhanced(ModelState& s, const std::vector<FeatureBatch>& feats, const EpochOptions& o, EpochRecord& rec) {
  const bool use_dhat = s.config.enable_domainaug;
  s.set_trainable({"E_l", "C_l"});
  Rng rng = stream(s, kStage4Stream);
  Mean aug;
  for (size_t i = 0; i < feats.size(); ++i) {
    const auto b = static_cast<int64_t>(i);
    s.zero_grad();
    auto f_s = Var::constant(feats[i].f_s);
    // Inputs to D are fixed; the gradient reaches E_l through its second application.
    auto l_s = ag::detach(s.nets.live_extractor(f_s));
    auto d_f = s.nets.domain_extractor(f_s);
    auto l_tilde = s.adaptor(l_s, rng).output;
    auto head = [&](const Var& l, const Var& d) {
      return s.nets.live_head(s.nets.live_extractor(s.nets.reconstructor(l, d)));
    };
    auto p_rec = head(l_s, d_f);
    auto p_tilde = head(l_tilde, d_f);
    Var p_hat;
    if (use_dhat) p_hat = head(l_s, domainaug::gin_forward(s.gin, s.generator, d_f, rng).output);
    auto loss = loss_feature_enhanced(p_rec, p_hat, p_tilde);
    check_finite(loss, 4, b, "feature-enhanced loss");
    ag::backward(loss);
    step(s, {"E_l", "C_l"}, 4, b);
    aug.add(loss.item());
    log_step(o, s, 4, b, loss.item());
  }
  rec.l_aug = aug.get();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Var loss_feature_enhanced(const Var& p_rec, const Var& p_hat, const Var& p_tilde) {
  auto loss = ag::add(nets::mean_neg_log(p_rec), nets::mean_neg_log_complement(p_tilde));
  if (p_hat.defined()) loss = ag::add(loss, nets::mean_neg_log(p_hat));
  return loss;
}

const std::string& history_header() {
  static const std::string h =
      "epoch,phase,stages,batches,l_domain,l_live,l_dis,l_rec,ufd_total,l_unl,l_pres,l_mine,liveaug_total,"
      "mine_skipped,l_adv,l_d,domainaug_total,l_aug,bank_size,bank_inserts,cd_accuracy";
  return h;
}

std::string history_row(const EpochRecord& r) {
  std::string stages;
  for (size_t i = 0; i < r.stages.size(); ++i) stages += (i ? "-" : "") + std::to_string(r.stages[i]);
  std::string row = std::to_string(r.epoch) + "," + (r.warmup ? "warmup" : "full") + "," + stages + "," +
                    std::to_string(r.batches);
  for (double v : {r.l_domain, r.l_live, r.l_dis, r.l_rec, r.ufd_total, r.l_unl, r.l_pres, r.l_mine,
                   r.liveaug_total}) {
    row += "," + fmt(v);
  }
  row += "," + std::to_string(r.mine_skipped);
  for (double v : {r.l_adv, r.l_d, r.domainaug_total, r.l_aug}) row += "," + fmt(v);
  row += "," + std::to_string(r.bank_size) + "," + std::to_string(r.bank_inserts) + "," + fmt(r.domain_head_accuracy);
  return row;
}

EpochRecord train_epoch(ModelState& s, const datakit::PatchDataset& data, const EpochOptions& o) {
  if (data.empty()) throw InputError("train_epoch: empty dataset");
  const bool full = !o.warmup;
  if (full && s.config.enable_domainaug && !s.nets.domain_head.params().frozen()) {
    throw SequencingError("train_epoch: full epochs need a pretrained, frozen C_d");
  }
  EpochRecord rec;
  rec.epoch = s.epoch + 1;
  rec.warmup = o.warmup;
  rec.l_unl = rec.l_pres = rec.l_mine = rec.liveaug_total = kNaN;
  rec.l_adv = rec.l_d = rec.domainaug_total = rec.l_aug = kNaN;
  rec.domain_head_accuracy = s.domain_head_ready ? s.domain_head_accuracy : kNaN;

  auto run = [&](int stage, auto&& body) {
    Clock clock;
    body();
    rec.stages.push_back(stage);
    rec.stage_seconds[static_cast<size_t>(stage - 1)] = clock.seconds();
    if (o.observer) o.observer(stage, s);
  };

  run(1, [&] { stage_ufd(s, data, o, rec); });
  if (full) {
    std::vector<FeatureBatch> feats;
    Clock encode_clock;
    feats = encode_stream(s, data);
    const double encode_seconds = encode_clock.seconds();
    if (s.config.enable_liveaug) run(2, [&] { stage_liveaug(s, feats, o, rec); });
    if (s.config.enable_domainaug) run(3, [&] { stage_domainaug(s, feats, o, rec); });
    run(4, [&] { stage_enhanced(s, feats, o, rec); });
    rec.stage_seconds[1] += encode_seconds;
  }
  s.set_trainable({});
  rec.bank_size = static_cast<int64_t>(s.bank.size());
  ++s.epoch;
  s.history.push_back(history_row(rec));
  return rec;
}

DomainFeatures harvest_domain_features(ModelState& s, const datakit::PatchDataset& data) {
  s.set_trainable({});
  datakit::BatchIterator it(data, batch_options(s.config), stream(s, kHarvestStream));
  std::vector<Tensor> ds, ls;
  int64_t rows = 0;
  while (auto batch = it.next()) {
    auto f = s.nets.encoder(Var::constant(batch->fg_masked_s));
    ds.push_back(s.nets.domain_extractor(f).value());
    ls.push_back(s.nets.live_extractor(f).value());
    rows += batch->size();
  }
  const int64_t dim = s.config.dims.latent_dim;
  DomainFeatures out{Tensor({rows, dim}), Tensor({rows, dim})};
  int64_t off = 0;
  for (size_t i = 0; i < ds.size(); ++i) {
    std::copy_n(ds[i].data(), ds[i].numel(), out.domain.data() + off);
    std::copy_n(ls[i].data(), ls[i].numel(), out.liveness.data() + off);
    off += ds[i].numel();
  }
  return out;
}

nets::DomainPretrainReport pretrain_domain_head(ModelState& s, const datakit::PatchDataset& data) {
  if (s.epoch < s.config.warmup_epochs) {
    throw SequencingError("C_d pretraining needs " + std::to_string(s.config.warmup_epochs) +
                          " warm-up epochs, only " + std::to_string(s.epoch) + " completed");
  }
  auto feats = harvest_domain_features(s, data);
  nets::DomainPretrainOptions opts;
  opts.epochs = s.config.domain_head_epochs;
  opts.seed = Rng::derive(s.config.seed, {static_cast<uint64_t>(s.epoch), kHarvestStream}).next_u64();
  auto report = nets::pretrain_domain_head(s.nets.domain_head, s.optimizer("C_d"), feats.domain, feats.liveness, opts);
  s.domain_head_ready = true;
  s.domain_head_accuracy = report.train_accuracy;
  s.set_trainable({});
  return report;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int64_t epoch) {
  return dir / ("ckpt_epoch" + std::to_string(epoch));
}

namespace {

class FileStepLog : public StepLog {
 public:
  FileStepLog(const std::filesystem::path& path, bool append) : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw Error("cannot open " + path.string());
    if (!append) out_ << "epoch,stage,batch,loss\n";
  }
  void write(int64_t epoch, int stage, int64_t batch, double loss) override {
    out_ << epoch << ',' << stage << ',' << batch << ',' << fmt(loss) << '\n';
  }

 private:
  std::ofstream out_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out.good()) throw Error("failed to write " + path.string());
}

}  // namespace

FitResult fit(const TrainConfig& config, const datakit::PatchDataset& train, const FitOptions& options) {
  config.validate();
  if (train.empty()) throw InputError("fit: empty training set");
  FitResult result;
  if (options.resume_from) {
    result.state = load_checkpoint(*options.resume_from, config.dims);
    auto& s = *result.state;
    if (s.config.seed != config.seed) throw InputError("fit: resume seed differs from the checkpoint's");
    s.config = config;
    for (const auto& name : group_names()) s.optimizer(name).set_lr(config.lr(name));
  } else {
    result.state = std::make_unique<ModelState>(config);
  }
  auto& s = *result.state;
  const bool write = !config.output_dir.empty();
  std::unique_ptr<FileStepLog> steps;
  if (write) {
    std::filesystem::create_directories(config.output_dir);
    steps = std::make_unique<FileStepLog>(config.output_dir / "steps.csv", options.resume_from.has_value());
    result.history_path = config.output_dir / "history.csv";
  }

  std::string timing = "epoch,stage1_s,stage2_s,stage3_s,stage4_s\n";
  while (s.epoch < config.epochs) {
    EpochOptions eo;
    eo.warmup = s.epoch < config.warmup_epochs;
    eo.step_log = steps.get();
    if (!eo.warmup && config.enable_domainaug && !s.domain_head_ready) pretrain_domain_head(s, train);
    auto rec = train_epoch(s, train, eo);
    if (write) {
      std::string hist = history_header() + "\n";
      for (const auto& row : s.history) hist += row + "\n";
      write_text(result.history_path, hist);
      timing += std::to_string(rec.epoch);
      for (double t : rec.stage_seconds) timing += "," + fmt(t);
      timing += "\n";
      write_text(config.output_dir / "timing.csv", timing);
      if (config.write_checkpoints) {
        result.final_checkpoint = checkpoint_path(config.output_dir, s.epoch);
        save_checkpoint(s, result.final_checkpoint);
      }
    }
    if (options.on_epoch) options.on_epoch(rec);
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace ufda::trainer
