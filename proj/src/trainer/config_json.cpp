#include "ufda/trainer/config_json.hpp"

#include <set>

#include "ufda/core/error.hpp"

namespace ufda::trainer {

using nlohmann::json;

const char* to_string(BankInsertMode mode) { return mode == BankInsertMode::per_batch ? "per_batch" : "per_sample"; }
const char* to_string(ufd::RecNorm norm) { return norm == ufd::RecNorm::l1 ? "l1" : "l2"; }
const char* to_string(ufd::DisMode mode) { return mode == ufd::DisMode::signed_cosine ? "signed" : "absolute"; }

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

template <typename E>
void take_enum(const json& j, const char* key, E& out, std::initializer_list<std::pair<const char*, E>> choices,
               const std::string& where) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) throw InputError(where + ": '" + key + "' must be a string");
  const auto s = j.at(key).get<std::string>();
  for (const auto& [name, value] : choices) {
    if (s == name) {
      out = value;
      return;
    }
  }
  throw InputError(where + ": unknown value '" + s + "' for '" + key + "'");
}

}  // namespace

json to_json(const TrainConfig& c) {
  json lr = json::object();
  for (const auto& name : group_names()) lr[name] = c.lr(name);
  return {{"epochs", c.epochs},
          {"warmup_epochs", c.warmup_epochs},
          {"batch_size", c.batch_size},
          {"mask_ratio", c.mask_ratio},
          {"feature_mask_ratio", c.feature_mask_ratio},
          {"learning_rates", lr},
          {"default_lr", c.default_lr},
          {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"bank_delta", c.bank_delta},
          {"bank_capacity", c.bank_capacity},
          {"bank_insert", to_string(c.bank_insert)},
          {"rec_norm", to_string(c.rec_norm)},
          {"dis_mode", to_string(c.dis_mode)},
          {"adaptor_init_std", c.adaptor_init_std},
          {"domain_head_epochs", c.domain_head_epochs},
          {"enable_liveaug", c.enable_liveaug},
          {"enable_domainaug", c.enable_domainaug},
          {"dims",
           {{"channels", c.dims.channels},
            {"patch_size", c.dims.patch_size},
            {"feature_dim", c.dims.feature_dim},
            {"latent_dim", c.dims.latent_dim},
            {"hidden_dim", c.dims.hidden_dim},
            {"encoder_width", c.dims.encoder_width},
            {"stem_cdc_theta", c.dims.stem_cdc_theta}}},
          {"gin",
           {{"noise_dim", c.gin.noise_dim},
            {"hidden_dim", c.gin.hidden_dim},
            {"per_dimension", c.gin.per_dimension},
            {"eps", c.gin.eps}}},
          {"seed", c.seed},
          {"write_checkpoints", c.write_checkpoints}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  const std::string where = "train";
  reject_unknown(j,
                 {"epochs", "warmup_epochs", "batch_size", "mask_ratio", "feature_mask_ratio", "learning_rates",
                  "default_lr", "lambda1", "lambda2", "bank_delta", "bank_capacity", "bank_insert", "rec_norm",
                  "dis_mode", "adaptor_init_std", "domain_head_epochs", "enable_liveaug", "enable_domainaug", "dims",
                  "gin", "seed", "write_checkpoints"},
                 where);
  take(j, "epochs", c.epochs, where);
  take(j, "warmup_epochs", c.warmup_epochs, where);
  take(j, "batch_size", c.batch_size, where);
  take(j, "mask_ratio", c.mask_ratio, where);
  take(j, "feature_mask_ratio", c.feature_mask_ratio, where);
  take(j, "default_lr", c.default_lr, where);
  if (j.contains("learning_rates")) {
    const auto& lr = j.at("learning_rates");
    reject_unknown(lr, std::set<std::string>(group_names().begin(), group_names().end()), "train.learning_rates");
    for (const auto& [name, value] : lr.items()) {
      if (!value.is_number()) throw InputError("train.learning_rates: bad value for '" + name + "'");
      c.learning_rates[name] = value.get<double>();
    }
  }
  take(j, "lambda1", c.lambda1, where);
  take(j, "lambda2", c.lambda2, where);
  take(j, "bank_delta", c.bank_delta, where);
  take(j, "bank_capacity", c.bank_capacity, where);
  take_enum(j, "bank_insert", c.bank_insert,
            {{"per_batch", BankInsertMode::per_batch}, {"per_sample", BankInsertMode::per_sample}}, where);
  take_enum(j, "rec_norm", c.rec_norm, {{"l1", ufd::RecNorm::l1}, {"l2", ufd::RecNorm::l2}}, where);
  take_enum(j, "dis_mode", c.dis_mode,
            {{"signed", ufd::DisMode::signed_cosine}, {"absolute", ufd::DisMode::absolute_cosine}}, where);
  take(j, "adaptor_init_std", c.adaptor_init_std, where);
  take(j, "domain_head_epochs", c.domain_head_epochs, where);
  take(j, "enable_liveaug", c.enable_liveaug, where);
  take(j, "enable_domainaug", c.enable_domainaug, where);
  if (j.contains("dims")) {
    const auto& d = j.at("dims");
    reject_unknown(d, {"channels", "patch_size", "feature_dim", "latent_dim", "hidden_dim", "encoder_width",
                    "stem_cdc_theta"},
                   "train.dims");
    take(d, "channels", c.dims.channels, "train.dims");
    take(d, "patch_size", c.dims.patch_size, "train.dims");
    take(d, "feature_dim", c.dims.feature_dim, "train.dims");
    take(d, "latent_dim", c.dims.latent_dim, "train.dims");
    take(d, "hidden_dim", c.dims.hidden_dim, "train.dims");
    take(d, "encoder_width", c.dims.encoder_width, "train.dims");
    take(d, "stem_cdc_theta", c.dims.stem_cdc_theta, "train.dims");
  }
  if (j.contains("gin")) {
    const auto& g = j.at("gin");
    reject_unknown(g, {"noise_dim", "hidden_dim", "per_dimension", "eps"}, "train.gin");
    take(g, "noise_dim", c.gin.noise_dim, "train.gin");
    take(g, "hidden_dim", c.gin.hidden_dim, "train.gin");
    take(g, "per_dimension", c.gin.per_dimension, "train.gin");
    take(g, "eps", c.gin.eps, "train.gin");
  }
  take(j, "seed", c.seed, where);
  take(j, "write_checkpoints", c.write_checkpoints, where);
  return c;
}

}  // namespace ufda::trainer
