#include "ufda/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ufda/cli/run_config.hpp"
#include "ufda/core/error.hpp"
#include "ufda/datakit/batches.hpp"
#include "ufda/evalkit/report.hpp"
#include "ufda/evalkit/scoring.hpp"
#include "ufda/trainer/checkpoint.hpp"
#include "ufda/trainer/train.hpp"

namespace ufda::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run config; built-in defaults when omitted");
  cmd->add_option("--out", c.out, "output directory (default depends on the subcommand, see paths in the config)");
  c.seed_opt = cmd->add_option("--seed", c.seed, "random seed override")->capture_default_str();
}

RunConfig base_config(const Common& c) { return c.config.empty() ? RunConfig{} : load_run_config(c.config); }

bool given(const CLI::Option* opt) { return opt && opt->count() > 0; }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---- synth ----

struct SynthArgs {
  Common common;
  datakit::SynthConfig defaults;
  int64_t n_train_live = defaults.n_train_live, n_test_live = defaults.n_test_live,
          n_test_spoof = defaults.n_test_spoof;
  CLI::Option *o_train = nullptr, *o_live = nullptr, *o_spoof = nullptr;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  auto config = base_config(a.common);
  if (given(a.common.seed_opt)) config.synth.seed = a.common.seed;
  if (given(a.o_train)) config.synth.n_train_live = a.n_train_live;
  if (given(a.o_live)) config.synth.n_test_live = a.n_test_live;
  if (given(a.o_spoof)) config.synth.n_test_spoof = a.n_test_spoof;
  const fs::path dir = a.common.out.empty() ? config.data_dir() : fs::path(a.common.out);
  config.paths.data_dir = dir.string();
  const auto manifest = datakit::generate_synthetic(config.synth, dir);
  echo_config(config, dir / "config.json");
  out << "wrote " << manifest.records.size() << " records to " << (dir / "manifest.csv").string() << '\n';
  return 0;
}

// ---- train ----

struct TrainArgs {
  Common common;
  trainer::TrainConfig defaults;
  int64_t epochs = defaults.epochs, warmup = defaults.warmup_epochs, batch_size = defaults.batch_size;
  double lr = defaults.default_lr;
  std::string manifest, resume, dis_mode = "absolute", bank_insert = "per_batch";
  bool no_liveaug = false, no_domainaug = false, quiet = false;
  CLI::Option *o_epochs = nullptr, *o_warmup = nullptr, *o_batch = nullptr, *o_lr = nullptr, *o_dis = nullptr,
              *o_bank = nullptr;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  auto config = base_config(a.common);
  auto& t = config.train;
  if (given(a.common.seed_opt)) t.seed = a.common.seed;
  if (given(a.o_epochs)) t.epochs = a.epochs;
  if (given(a.o_warmup)) t.warmup_epochs = a.warmup;
  if (given(a.o_batch)) t.batch_size = a.batch_size;
  if (given(a.o_lr)) {
    t.default_lr = a.lr;
    t.learning_rates.clear();
  }
  if (given(a.o_dis)) {
    t.dis_mode = a.dis_mode == "absolute" ? ufd::DisMode::absolute_cosine : ufd::DisMode::signed_cosine;
  }
  if (given(a.o_bank)) {
    t.bank_insert = a.bank_insert == "per_sample" ? trainer::BankInsertMode::per_sample
                                                  : trainer::BankInsertMode::per_batch;
  }
  if (a.no_liveaug) t.enable_liveaug = false;
  if (a.no_domainaug) t.enable_domainaug = false;
  if (!a.manifest.empty()) config.paths.manifest = a.manifest;
  const fs::path run = a.common.out.empty() ? config.run_dir() : fs::path(a.common.out);
  config.paths.run_dir = run.string();
  config.paths.manifest = config.manifest().string();
  t.output_dir = run;
  t.validate();

  const auto manifest = datakit::read_manifest(config.manifest());
  const auto train = datakit::PatchDataset::load(manifest, datakit::Split::train, static_cast<int>(t.dims.patch_size));
  if (train.empty()) throw InputError("manifest " + config.manifest().string() + " has no train records");
  fs::create_directories(run);
  echo_config(config, run / "config.json");

  trainer::FitOptions fo;
  if (!a.resume.empty()) fo.resume_from = fs::path(a.resume);
  if (!a.quiet) {
    fo.on_epoch = [&err](const trainer::EpochRecord& r) {
      double secs = 0;
      for (double s : r.stage_seconds) secs += s;
      err << "epoch " << r.epoch << (r.warmup ? " [warmup]" : "") << " ufd " << fmt(r.ufd_total);
      if (!r.warmup) err << " liveaug " << fmt(r.liveaug_total) << " domainaug " << fmt(r.domainaug_total)
                         << " aug " << fmt(r.l_aug) << " bank " << r.bank_size;
      err << " (" << fmt(secs) << " s)\n";
    };
  }
  auto result = trainer::fit(t, train, fo);
  out << "trained " << result.state->epoch << " epochs; history " << result.history_path.string() << "; checkpoint "
      << result.final_checkpoint.string() << '\n';
  return 0;
}

// ---- eval ----

struct EvalArgs {
  Common common;
  std::string checkpoint, manifest, threshold_split = "test";
  int64_t batch_size = 64;
  CLI::Option *o_split = nullptr, *o_batch = nullptr;
};

fs::path newest_checkpoint(const fs::path& run) {
  if (!fs::is_directory(run)) throw InputError("no checkpoint: run directory " + run.string() + " does not exist");
  const std::regex pattern("ckpt_epoch([0-9]+)");
  fs::path best;
  long long best_epoch = -1;
  for (const auto& entry : fs::directory_iterator(run)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern) && std::stoll(m[1]) > best_epoch) {
      best_epoch = std::stoll(m[1]);
      best = entry.path();
    }
  }
  if (best.empty()) throw InputError("no checkpoint found in " + run.string());
  return best;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  auto config = base_config(a.common);
  if (given(a.o_split)) config.eval.threshold_split = a.threshold_split;
  if (given(a.o_batch)) config.eval.batch_size = a.batch_size;
  if (!a.checkpoint.empty()) config.eval.checkpoint = a.checkpoint;
  if (!a.manifest.empty()) config.paths.manifest = a.manifest;
  const fs::path ckpt = config.eval.checkpoint.empty() ? newest_checkpoint(config.run_dir()) : fs::path(config.eval.checkpoint);
  if (!fs::exists(ckpt)) throw InputError("checkpoint not found: " + ckpt.string());
  const fs::path dir = a.common.out.empty() ? config.run_dir() / "eval" : fs::path(a.common.out);

  auto state = trainer::load_checkpoint(ckpt);
  const int patch = static_cast<int>(state->config.dims.patch_size);
  const auto manifest = datakit::read_manifest(config.manifest());
  const auto test = datakit::PatchDataset::load(manifest, datakit::Split::test, patch);
  const auto scores = evalkit::score_dataset(*state, test, "test", config.eval.batch_size);
  evalkit::ScoreSet threshold_scores = scores;
  fs::create_directories(dir);
  if (config.eval.threshold_split == "dev") {
    const auto dev = datakit::PatchDataset::load(manifest, datakit::Split::dev, patch);
    threshold_scores = evalkit::score_dataset(*state, dev, "dev", config.eval.batch_size);
    evalkit::write_score_dump(threshold_scores, dir / "scores_dev.csv");
  }
  const auto report = evalkit::evaluate(scores, threshold_scores);
  evalkit::write_score_dump(scores, dir / "scores.csv");
  evalkit::emit_report(report, evalkit::roc_curve(scores), dir);

  datakit::PatchDataset live(patch);
  for (const auto& s : test.samples()) {
    if (s.label == datakit::Label::live) live.add(s);
  }
  if (!live.empty()) {
    const auto probe = evalkit::probe_features(*state, live, state->config.seed, config.eval.batch_size);
    nlohmann::json pj = {{"mean_abs_cos_l_d", probe.mean_abs_cos_l_d},
                         {"mean_cd_dhat", probe.mean_cd_dhat},
                         {"mean_cd_l", probe.mean_cd_l},
                         {"mean_cos_ltilde_l", probe.mean_cos_ltilde_l},
                         {"samples", probe.samples},
                         {"checkpoint", ckpt.filename().string()}};
    std::ofstream(dir / "probe.json", std::ios::trunc) << pj.dump(2) << '\n';
  }
  out << "AUC " << fmt(report.auc) << " HTER " << fmt(report.hter) << " ACER " << fmt(report.acer) << " tau "
      << fmt(report.threshold) << " (" << dir.string() << ")\n";
  return 0;
}

// ---- plot ----

struct PlotArgs {
  Common common;
  std::string history;
};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (epoch, value)
};

std::vector<Series> read_history(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("history file not found: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty history");
  if (line != trainer::history_header()) throw FormatError(path.string() + ": unexpected history header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) header.push_back(f);
  }
  const std::vector<std::string> wanted{"ufd_total", "liveaug_total", "domainaug_total", "l_aug"};
  std::vector<Series> series;
  for (const auto& w : wanted) series.push_back({w, {}});
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != header.size()) throw FormatError(path.string() + ": malformed row " + std::to_string(rows + 1));
    double epoch;
    try {
      epoch = std::stod(fields[0]);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": malformed row " + std::to_string(rows + 1));
    }
    for (auto& s : series) {
      const auto col = static_cast<size_t>(std::find(header.begin(), header.end(), s.name) - header.begin());
      if (fields[col].empty()) continue;
      try {
        s.points.emplace_back(epoch, std::stod(fields[col]));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": malformed value in row " + std::to_string(rows + 1));
      }
    }
    ++rows;
  }
  if (rows == 0) throw FormatError(path.string() + ": empty history");
  return series;
}

void plot_history(const std::vector<Series>& series, const fs::path& path) {
  constexpr int kPanel = 320, kMargin = 40;
  cv::Mat img(2 * kPanel, 2 * kPanel, CV_8UC3, cv::Scalar(255, 255, 255));
  double max_epoch = 1;
  for (const auto& s : series) {
    for (const auto& p : s.points) max_epoch = std::max(max_epoch, p.first);
  }
  for (size_t k = 0; k < series.size(); ++k) {
    const int ox = static_cast<int>(k % 2) * kPanel, oy = static_cast<int>(k / 2) * kPanel;
    const cv::Point tl(ox + kMargin, oy + kMargin), br(ox + kPanel - 12, oy + kPanel - kMargin);
    cv::rectangle(img, tl, br, cv::Scalar(0, 0, 0), 1);
    cv::putText(img, "stage " + std::to_string(k + 1) + ": " + series[k].name, cv::Point(ox + kMargin, oy + 26),
                cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(0, 0, 0), 1);
    const auto& pts = series[k].points;
    if (pts.empty()) continue;
    double lo = pts[0].second, hi = pts[0].second;
    for (const auto& p : pts) {
      lo = std::min(lo, p.second);
      hi = std::max(hi, p.second);
    }
    if (hi - lo < 1e-12) {
      hi += 0.5;
      lo -= 0.5;
    }
    std::vector<cv::Point> poly;
    for (const auto& p : pts) {
      const double fx = p.first / max_epoch, fy = (p.second - lo) / (hi - lo);
      poly.emplace_back(tl.x + static_cast<int>(std::lround(fx * (br.x - tl.x))),
                        br.y - static_cast<int>(std::lround(fy * (br.y - tl.y))));
    }
    cv::polylines(img, poly, false, cv::Scalar(180, 60, 20), 2, cv::LINE_AA);
    for (const auto& q : poly) cv::circle(img, q, 2, cv::Scalar(20, 20, 200), -1);
    char label[64];
    std::snprintf(label, sizeof label, "%.4g", hi);
    cv::putText(img, label, cv::Point(ox + 4, tl.y + 4), cv::FONT_HERSHEY_SIMPLEX, 0.35, cv::Scalar(0, 0, 0), 1);
    std::snprintf(label, sizeof label, "%.4g", lo);
    cv::putText(img, label, cv::Point(ox + 4, br.y), cv::FONT_HERSHEY_SIMPLEX, 0.35, cv::Scalar(0, 0, 0), 1);
  }
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), img)) throw Error("failed to write " + path.string());
}

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  auto config = base_config(a.common);
  const fs::path history = a.history.empty() ? config.run_dir() / "history.csv" : fs::path(a.history);
  const fs::path dir = a.common.out.empty() ? history.parent_path() : fs::path(a.common.out);
  const auto series = read_history(history);
  const auto path = dir / "loss_curves.png";
  plot_history(series, path);
  out << "wrote " << path.string() << '\n';
  return 0;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ufdanet: one-class face anti-spoofing with disentangled and augmented features"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate the procedural live/spoof dataset");
  synth->alias("synth-data");
  add_common(synth, sa.common);
  sa.o_train = synth->add_option("--n-train-live", sa.n_train_live, "live training images")->capture_default_str();
  sa.o_live = synth->add_option("--n-test-live", sa.n_test_live, "live test images")->capture_default_str();
  sa.o_spoof = synth->add_option("--n-test-spoof", sa.n_test_spoof, "spoof test images")->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train on the live records of the manifest's train split");
  add_common(train, ta.common);
  ta.o_epochs = train->add_option("--epochs", ta.epochs, "total epochs, warm-up included")->capture_default_str();
  ta.o_warmup = train->add_option("--warmup", ta.warmup, "stage-1-only epochs before C_d pretraining")
                    ->capture_default_str();
  ta.o_batch = train->add_option("--batch-size", ta.batch_size, "mini-batch size")->capture_default_str();
  ta.o_lr = train->add_option("--lr", ta.lr, "learning rate for every parameter group")->capture_default_str();
  ta.o_dis = train->add_option("--dis-mode", ta.dis_mode, "disentanglement loss: signed or absolute cosine")
                 ->check(CLI::IsMember({"signed", "absolute"}))
                 ->capture_default_str();
  ta.o_bank = train->add_option("--bank-insert", ta.bank_insert, "memory bank candidates: per_batch or per_sample")
                  ->check(CLI::IsMember({"per_batch", "per_sample"}))
                  ->capture_default_str();
  train->add_option("--manifest", ta.manifest, "manifest path (default <data_dir>/manifest.csv)");
  train->add_option("--resume", ta.resume, "checkpoint to resume from");
  train->add_flag("--no-liveaug", ta.no_liveaug, "disable OOD liveness augmentation (stage 2)");
  train->add_flag("--no-domainaug", ta.no_domainaug, "disable domain augmentation (stage 3)");
  train->add_flag("--quiet", ta.quiet, "no per-epoch progress lines");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "score the test split and write metrics, score dump and ROC plot");
  add_common(eval, ea.common);
  eval->add_option("--checkpoint", ea.checkpoint, "checkpoint file (default newest in the run directory)");
  eval->add_option("--manifest", ea.manifest, "manifest path (default <data_dir>/manifest.csv)");
  ea.o_split = eval->add_option("--threshold-split", ea.threshold_split, "split the threshold is chosen on")
                   ->check(CLI::IsMember({"test", "dev"}))
                   ->capture_default_str();
  ea.o_batch = eval->add_option("--batch-size", ea.batch_size, "scoring batch size")->capture_default_str();

  PlotArgs pa;
  auto* plot = app.add_subcommand("plot", "draw per-stage loss curves from a history file");
  add_common(plot, pa.common);
  plot->add_option("--history", pa.history, "history file (default <run_dir>/history.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*synth) return cmd_synth(sa, out);
    if (*train) return cmd_train(ta, out, err);
    if (*eval) return cmd_eval(ea, out);
    if (*plot) return cmd_plot(pa, out);
  } catch (const std::exception& e) {
    err << "ufdanet: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace ufda::cli
