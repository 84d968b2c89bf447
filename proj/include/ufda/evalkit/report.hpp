#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ufda/evalkit/metrics.hpp"

namespace ufda::evalkit {

nlohmann::json report_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

// Writes report.json and roc.png (curve with the operating point marked) into
// out_dir, overwriting previous files.
void emit_report(const MetricsReport& report, const std::vector<RocPoint>& roc, const std::filesystem::path& out_dir);

// 480x480 8-bit raster of the curve; the point nearest tau is circled.
void plot_roc(const std::vector<RocPoint>& roc, double tau, const std::filesystem::path& path);

// "id,label,score" lines, score printed with 17 significant digits.
void write_score_dump(const ScoreSet& set, const std::filesystem::path& path);
ScoreSet read_score_dump(const std::filesystem::path& path);

}  // namespace ufda::evalkit
