#pragma once

#include <nlohmann/json.hpp>

#include "ufda/trainer/config.hpp"

namespace ufda::trainer {

// Full materialized form, every field present.
nlohmann::json to_json(const TrainConfig& config);
// Overlays the keys of j onto base. Unknown keys raise InputError naming the key.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

const char* to_string(BankInsertMode mode);
const char* to_string(ufd::RecNorm norm);
const char* to_string(ufd::DisMode mode);

}  // namespace ufda::trainer
