#include "ufda/cli/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "ufda/core/error.hpp"
#include "ufda/trainer/config_json.hpp"

namespace ufda::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw InputError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void take(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(where + ": bad value for '" + key + "'");
  }
}

json synth_json(const datakit::SynthConfig& s) {
  return {{"n_train_live", s.n_train_live},
          {"n_test_live", s.n_test_live},
          {"n_test_spoof", s.n_test_spoof},
          {"n_dev_live", s.n_dev_live},
          {"n_dev_spoof", s.n_dev_spoof},
          {"image_size", s.image_size},
          {"domain_palette_count", s.domain_palette_count},
          {"liveness_band_lo", s.liveness_band_lo},
          {"liveness_band_hi", s.liveness_band_hi},
          {"texture_amplitude", s.texture_amplitude},
          {"spoof_blur_sigma", s.spoof_blur_sigma},
          {"seed", s.seed}};
}

datakit::SynthConfig synth_from_json(const json& j) {
  const std::string w = "synth";
  reject_unknown(j,
                 {"n_train_live", "n_test_live", "n_test_spoof", "n_dev_live", "n_dev_spoof", "image_size",
                  "domain_palette_count", "liveness_band_lo", "liveness_band_hi", "texture_amplitude",
                  "spoof_blur_sigma", "seed"},
                 w);
  datakit::SynthConfig s;
  take(j, "n_train_live", s.n_train_live, w);
  take(j, "n_test_live", s.n_test_live, w);
  take(j, "n_test_spoof", s.n_test_spoof, w);
  take(j, "n_dev_live", s.n_dev_live, w);
  take(j, "n_dev_spoof", s.n_dev_spoof, w);
  take(j, "image_size", s.image_size, w);
  take(j, "domain_palette_count", s.domain_palette_count, w);
  take(j, "liveness_band_lo", s.liveness_band_lo, w);
  take(j, "liveness_band_hi", s.liveness_band_hi, w);
  take(j, "texture_amplitude", s.texture_amplitude, w);
  take(j, "spoof_blur_sigma", s.spoof_blur_sigma, w);
  take(j, "seed", s.seed, w);
  return s;
}

}  // namespace

fs::path RunConfig::root() const {
  if (!paths.root.empty()) return paths.root;
  if (const char* env = std::getenv("UFDANET_OUT"); env && *env) return env;
  return "ufdanet_out";
}

fs::path RunConfig::data_dir() const { return paths.data_dir.empty() ? root() / "data" : fs::path(paths.data_dir); }

fs::path RunConfig::manifest() const {
  return paths.manifest.empty() ? data_dir() / "manifest.csv" : fs::path(paths.manifest);
}

fs::path RunConfig::run_dir() const { return paths.run_dir.empty() ? root() / "run" : fs::path(paths.run_dir); }

json to_json(const RunConfig& c) {
  return {{"synth", synth_json(c.synth)},
          {"train", trainer::to_json(c.train)},
          {"eval",
           {{"threshold_split", c.eval.threshold_split},
            {"batch_size", c.eval.batch_size},
            {"checkpoint", c.eval.checkpoint}}},
          {"paths",
           {{"root", c.paths.root},
            {"data_dir", c.paths.data_dir},
            {"manifest", c.paths.manifest},
            {"run_dir", c.paths.run_dir}}}};
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j, {"synth", "train", "eval", "paths"}, "config");
  RunConfig c;
  if (j.contains("synth")) c.synth = synth_from_json(j.at("synth"));
  if (j.contains("train")) c.train = trainer::train_config_from_json(j.at("train"));
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    reject_unknown(e, {"threshold_split", "batch_size", "checkpoint"}, "eval");
    take(e, "threshold_split", c.eval.threshold_split, "eval");
    take(e, "batch_size", c.eval.batch_size, "eval");
    take(e, "checkpoint", c.eval.checkpoint, "eval");
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    reject_unknown(p, {"root", "data_dir", "manifest", "run_dir"}, "paths");
    take(p, "root", c.paths.root, "paths");
    take(p, "data_dir", c.paths.data_dir, "paths");
    take(p, "manifest", c.paths.manifest, "paths");
    take(p, "run_dir", c.paths.run_dir, "paths");
  }
  if (c.eval.threshold_split != "test" && c.eval.threshold_split != "dev") {
    throw InputError("eval: threshold_split must be 'test' or 'dev'");
  }
  if (c.eval.batch_size <= 0) throw InputError("eval: batch_size must be positive");
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

void echo_config(const RunConfig& config, const fs::path& path) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << to_json(config).dump(2) << '\n';
  if (!out.good()) throw Error("failed to write " + path.string());
}

}  // namespace ufda::cli
