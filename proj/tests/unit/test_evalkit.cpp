#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "testkit.hpp"
#include "ufda/core/error.hpp"
#include "ufda/datakit/synth.hpp"
#include "ufda/evalkit/metrics.hpp"
#include "ufda/evalkit/report.hpp"
#include "ufda/evalkit/scoring.hpp"
#include "ufda/trainer/model_state.hpp"

using namespace ufda;
using namespace ufda::evalkit;
using namespace ufda::testkit;

namespace {

ScoreSet make_set(std::vector<double> live, std::vector<double> attack) {
  ScoreSet s;
  for (double v : live) {
    s.scores.push_back(v);
    s.labels.push_back(kLive);
  }
  for (double v : attack) {
    s.scores.push_back(v);
    s.labels.push_back(kAttack);
  }
  return s;
}

bool has_point(const std::vector<RocPoint>& roc, double fpr, double tpr) {
  for (const auto& p : roc) {
    if (p.fpr == fpr && p.tpr == tpr) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("evalkit") {
  TEST_CASE("roc examples") {
    auto roc = roc_curve(make_set({0.9, 0.8}, {0.2, 0.1}));
    CHECK(has_point(roc, 0, 1));
    roc = roc_curve(make_set({0.5, 0.5}, {0.5}));
    REQUIRE(roc.size() == 2);
    CHECK((roc[0].fpr == 0 && roc[0].tpr == 0));
    CHECK((roc[1].fpr == 1 && roc[1].tpr == 1));
    roc = roc_curve(make_set({0.9, 0.4}, {0.6, 0.1}));
    bool found = false;
    for (const auto& p : roc) {
      if (p.threshold > 0.4 && p.threshold <= 0.6) {
        CHECK(p.fpr == 0.5);
        CHECK(p.tpr == 0.5);
        found = true;
      }
    }
    CHECK(found);
    CHECK_THROWS_AS(roc_curve(make_set({0.3, 0.4}, {})), InputError);
  }

  TEST_CASE("auc examples") {
    CHECK(auc(roc_curve(make_set({0.9, 0.8}, {0.2, 0.1}))) == 1.0);
    CHECK(auc(roc_curve(make_set({0.2, 0.1}, {0.9, 0.8}))) == 0.0);
    CHECK(auc(roc_curve(make_set({0.9, 0.4}, {0.6, 0.1}))) == doctest::Approx(0.75).epsilon(1e-15));
  }

  TEST_CASE("youden examples") {
    auto y = youden_threshold(roc_curve(make_set({0.9, 0.8}, {0.2, 0.1})));
    CHECK(y.j == 1.0);
    CHECK(y.tau == doctest::Approx(0.5).epsilon(1e-15));
    y = youden_threshold(roc_curve(make_set({0.3, 0.3}, {0.3, 0.3})));
    CHECK(y.j == 0.0);
  }

  TEST_CASE("auc and youden match brute force on 200 random sets") {
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
      const auto set = random_score_set(rng);
      const auto roc = roc_curve(set);
      CHECK(std::abs(auc(roc) - auc_pair_oracle(set)) <= 1e-12);
      CHECK(std::abs(youden_threshold(roc).j - youden_exhaustive(set)) <= 1e-12);
    }
  }

  TEST_CASE("youden tau realizes the optimal J") {
    Rng rng(2);
    for (int t = 0; t < 200; ++t) {
      const auto set = random_score_set(rng);
      const auto y = youden_threshold(roc_curve(set));
      const auto m = pad_metrics(set, std::min(1.0, y.tau));
      CHECK((1 - m.bpcer) - m.apcer == doctest::Approx(y.j).epsilon(1e-12));
    }
  }

  TEST_CASE("auc is invariant under strictly increasing maps") {
    Rng rng(3);
    const std::vector<std::function<double(double)>> maps{[](double s) { return s * s * s; },
                                                          [](double s) { return std::exp(3 * s) - 7; },
                                                          [](double s) { return 1 / (1 + std::exp(-10 * (s - 0.3))); }};
    for (int t = 0; t < 50; ++t) {
      const auto set = random_score_set(rng);
      const double base = auc(roc_curve(set));
      for (const auto& f : maps) {
        auto mapped = set;
        for (auto& s : mapped.scores) s = f(s);
        CHECK(std::abs(auc(roc_curve(mapped)) - base) <= 1e-9);
      }
    }
  }

  TEST_CASE("pad metrics examples") {
    auto perfect = make_set({0.9, 0.8}, {0.2, 0.1});
    const auto y = youden_threshold(roc_curve(perfect));
    auto m = pad_metrics(perfect, y.tau);
    CHECK(m.apcer == 0);
    CHECK(m.bpcer == 0);
    CHECK(m.acer == 0);
    CHECK(m.hter == 0);

    // 10 attacks, 2 at or above tau; 10 live, 1 below
    auto set = make_set({0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.1},
                        {0.5, 0.6, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1});
    m = pad_metrics(set, 0.5);
    CHECK(m.apcer == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(m.bpcer == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(m.acer == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(m.tp == 9);
    CHECK(m.fn == 1);
    CHECK(m.fp == 2);
    CHECK(m.tn == 8);

    m = pad_metrics(set, 0.0);
    CHECK(m.bpcer == 0);
    CHECK(m.apcer == 1);
    CHECK_THROWS_AS(pad_metrics(set, 1.5), InputError);
    CHECK_THROWS_AS(pad_metrics(make_set({0.5}, {}), 0.5), InputError);
  }

  TEST_CASE("apcer falls and bpcer rises with tau; acer identity is exact") {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
      const auto set = random_score_set(rng);
      double last_apcer = 2, last_bpcer = -1;
      for (int k = 0; k <= 40; ++k) {
        const auto m = pad_metrics(set, k / 40.0);
        CHECK(m.apcer <= last_apcer);
        CHECK(m.bpcer >= last_bpcer);
        CHECK(m.acer == (m.apcer + m.bpcer) / 2);
        CHECK(m.hter == (m.apcer + m.bpcer) / 2);
        CHECK((m.apcer >= 0 && m.apcer <= 1 && m.bpcer >= 0 && m.bpcer <= 1));
        last_apcer = m.apcer;
        last_bpcer = m.bpcer;
      }
    }
  }

  TEST_CASE("score set validation") {
    ScoreSet s = make_set({0.5}, {0.2});
    s.labels[0] = 3;
    CHECK_THROWS_AS(s.validate(false), InputError);
    s = make_set({0.5}, {std::nan("")});
    CHECK_THROWS_AS(s.validate(false), InputError);
    s = make_set({0.5}, {});
    CHECK_NOTHROW(s.validate(false));
    CHECK_THROWS_AS(s.validate(true), InputError);
  }

  TEST_CASE("report files match the in-memory report and re-emit identically") {
    TempDir dir("report");
    Rng rng(5);
    const auto set = random_score_set(rng);
    auto report = evaluate(set, set);
    const auto roc = roc_curve(set);
    emit_report(report, roc, dir.path());
    const auto first = read_file(dir / "report.json"), png = read_file(dir / "roc.png");
    const auto back = report_from_json(nlohmann::json::parse(first));
    CHECK(back.auc == report.auc);
    CHECK(back.threshold == report.threshold);
    CHECK(back.apcer == report.apcer);
    CHECK(back.bpcer == report.bpcer);
    CHECK(back.acer == report.acer);
    CHECK(back.hter == report.hter);
    CHECK(back.tp == report.tp);
    CHECK(back.fn == report.fn);
    emit_report(report, roc, dir.path());
    CHECK(read_file(dir / "report.json") == first);
    CHECK(read_file(dir / "roc.png") == png);
    CHECK(png.substr(1, 3) == "PNG");
    const auto img = cv::imread((dir / "roc.png").string());
    CHECK(img.rows == 480);
    CHECK(img.cols == 480);
  }

  TEST_CASE("score dump round trips exactly") {
    TempDir dir("dump");
    Rng rng(6);
    auto set = random_score_set(rng);
    for (size_t i = 0; i < set.size(); ++i) {
      set.scores[i] = rng.uniform();
      set.ids.push_back("img" + std::to_string(i));
    }
    write_score_dump(set, dir / "scores.csv");
    const auto back = read_score_dump(dir / "scores.csv");
    CHECK(back.scores == set.scores);
    CHECK(back.labels == set.labels);
    CHECK(back.ids == set.ids);
  }

  TEST_CASE("scoring is deterministic, bounded and needs a face box") {
    auto cfg = toy_config(7);
    trainer::ModelState s(cfg);
    for (auto& p : s.group("C_l").params()) {
      Rng rng(8);
      p.var.mutable_value() = random_tensor(p.var.shape(), rng);
    }
    datakit::SynthConfig sc;
    sc.image_size = 64;
    Rng rng(9);
    const auto palette = datakit::make_palette(2, 1);
    const auto live = datakit::render_live(sc, palette[0], rng);
    const double a = score(s, live.image, live.box), b = score(s, live.image, live.box);
    CHECK(a == b);
    CHECK((a >= 0 && a <= 1));
    CHECK_THROWS_AS(score(s, live.image, std::nullopt), InputError);
    CHECK_THROWS_AS(score(s, live.image, datakit::FaceBox{50, 50, 40, 40}), InputError);

    const auto data = toy_dataset(6, 16, 10);
    const auto set = score_dataset(s, data, "test", 4);
    CHECK(set.size() == 6);
    CHECK(set.ids[0] == data[0].id);
    for (double v : set.scores) CHECK((v >= 0 && v <= 1));
    // batching changes the product blocking, so only rounding may differ
    const auto rebatched = score_dataset(s, data, "test", 5);
    for (size_t i = 0; i < set.size(); ++i) CHECK(std::abs(rebatched.scores[i] - set.scores[i]) <= 1e-12);
  }
}
