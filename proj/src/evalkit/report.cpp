#include "ufda/evalkit/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ufda/core/error.hpp"

namespace ufda::evalkit {

using nlohmann::json;

json report_json(const MetricsReport& r) {
  return {{"auc", r.auc},
          {"threshold", r.threshold},
          {"youden_j", r.youden_j},
          {"apcer", r.apcer},
          {"bpcer", r.bpcer},
          {"acer", r.acer},
          {"hter", r.hter},
          {"hter_convention", "FAR = APCER, FRR = BPCER"},
          {"decision_rule", "live iff score >= threshold"},
          {"counts", {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}}},
          {"n_live", r.n_live},
          {"n_attack", r.n_attack},
          {"split", r.split},
          {"threshold_split", r.threshold_split}};
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  try {
    r.auc = j.at("auc").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.youden_j = j.at("youden_j").get<double>();
    r.apcer = j.at("apcer").get<double>();
    r.bpcer = j.at("bpcer").get<double>();
    r.acer = j.at("acer").get<double>();
    r.hter = j.at("hter").get<double>();
    const auto& c = j.at("counts");
    r.tp = c.at("tp").get<int64_t>();
    r.fp = c.at("fp").get<int64_t>();
    r.tn = c.at("tn").get<int64_t>();
    r.fn = c.at("fn").get<int64_t>();
    r.n_live = j.at("n_live").get<int64_t>();
    r.n_attack = j.at("n_attack").get<int64_t>();
    r.split = j.at("split").get<std::string>();
    r.threshold_split = j.at("threshold_split").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
  return r;
}

void plot_roc(const std::vector<RocPoint>& roc, double tau, const std::filesystem::path& path) {
  constexpr int kSize = 480, kMargin = 48;
  const int span = kSize - 2 * kMargin;
  cv::Mat img(kSize, kSize, CV_8UC3, cv::Scalar(255, 255, 255));
  auto at = [&](double fpr, double tpr) {
    return cv::Point(kMargin + static_cast<int>(std::lround(fpr * span)),
                     kSize - kMargin - static_cast<int>(std::lround(tpr * span)));
  };
  cv::rectangle(img, at(0, 1), at(1, 0), cv::Scalar(0, 0, 0), 1);
  cv::line(img, at(0, 0), at(1, 1), cv::Scalar(200, 200, 200), 1);
  std::vector<cv::Point> pts;
  for (const auto& p : roc) pts.push_back(at(p.fpr, p.tpr));
  cv::polylines(img, pts, false, cv::Scalar(180, 60, 20), 2, cv::LINE_AA);
  // Operating point: the lowest cut still above tau.
  const RocPoint* op = roc.empty() ? nullptr : &roc.front();
  for (const auto& p : roc) {
    if (p.threshold >= tau) op = &p;
  }
  if (op) cv::circle(img, at(op->fpr, op->tpr), 6, cv::Scalar(20, 20, 220), 2, cv::LINE_AA);
  cv::putText(img, "FPR", cv::Point(kSize / 2 - 16, kSize - 14), cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0), 1);
  cv::putText(img, "TPR", cv::Point(6, kSize / 2), cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0), 1);
  char label[64];
  std::snprintf(label, sizeof label, "AUC %.4f  tau %.4f", auc(roc), tau);
  cv::putText(img, label, cv::Point(kMargin, 30), cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0), 1);
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), img)) throw Error("failed to write " + path.string());
}

void emit_report(const MetricsReport& report, const std::vector<RocPoint>& roc, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "report.json", std::ios::trunc);
  out << report_json(report).dump(2) << '\n';
  if (!out.good()) throw Error("failed to write " + (out_dir / "report.json").string());
  plot_roc(roc, report.threshold, out_dir / "roc.png");
}

void write_score_dump(const ScoreSet& set, const std::filesystem::path& path) {
  set.validate(false);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "id,label,score\n";
  char buf[40];
  for (size_t i = 0; i < set.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", set.scores[i]);
    out << (set.ids.empty() ? std::to_string(i) : set.ids[i]) << ',' << set.labels[i] << ',' << buf << '\n';
  }
  if (!out.good()) throw Error("failed to write " + path.string());
}

ScoreSet read_score_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("score dump not found: " + path.string());
  ScoreSet set;
  std::string line;
  if (!std::getline(in, line) || line != "id,label,score") throw FormatError(path.string() + ": bad header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(','), b = line.rfind(',');
    if (a == std::string::npos || a == b) throw FormatError(path.string() + ": bad line '" + line + "'");
    set.ids.push_back(line.substr(0, a));
    try {
      set.labels.push_back(std::stoi(line.substr(a + 1, b - a - 1)));
      set.scores.push_back(std::stod(line.substr(b + 1)));
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": bad line '" + line + "'");
    }
  }
  set.validate(false);
  return set;
}

}  // namespace ufda::evalkit
