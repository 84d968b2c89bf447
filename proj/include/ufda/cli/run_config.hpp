#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ufda/datakit/synth.hpp"
#include "ufda/trainer/config.hpp"

namespace ufda::cli {

struct EvalOptions {
  std::string threshold_split = "test";  // split the Youden threshold is chosen on: test or dev
  int64_t batch_size = 64;
  std::string checkpoint;  // empty: newest ckpt_epoch{N} in the run directory
};

// Empty entries fall back to locations under root.
struct Paths {
  std::string root;      // empty: $UFDANET_OUT, else ./ufdanet_out
  std::string data_dir;  // empty: <root>/data
  std::string manifest;  // empty: <data_dir>/manifest.csv
  std::string run_dir;   // empty: <root>/run
};

struct RunConfig {
  datakit::SynthConfig synth;
  trainer::TrainConfig train;
  EvalOptions eval;
  Paths paths;

  std::filesystem::path root() const;
  std::filesystem::path data_dir() const;
  std::filesystem::path manifest() const;
  std::filesystem::path run_dir() const;
};

nlohmann::json to_json(const RunConfig& config);
// Unknown keys at any level raise InputError naming the key.
RunConfig run_config_from_json(const nlohmann::json& j);
// InputError naming the path when it is missing or not valid JSON.
RunConfig load_run_config(const std::filesystem::path& path);
// Writes the materialized config with every default filled in.
void echo_config(const RunConfig& config, const std::filesystem::path& path);

}  // namespace ufda::cli
