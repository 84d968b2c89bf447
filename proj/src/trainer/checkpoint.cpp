#include "ufda/trainer/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ufda/core/error.hpp"
#include "ufda/trainer/config_json.hpp"

namespace ufda::trainer {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'U', 'F', 'D', 'A', 'C', 'K', 'P', 'T'};

uint64_t fnv1a(const char* data, size_t n) {
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.append(b, sizeof(T));
  }
  void bytes(const std::string& s) { buf_ += s; }
  void tensor(const std::string& name, const Tensor& t) {
    put<uint32_t>(static_cast<uint32_t>(name.size()));
    bytes(name);
    put<uint32_t>(static_cast<uint32_t>(t.rank()));
    for (int64_t d : t.shape()) put<int64_t>(d);
    buf_.append(reinterpret_cast<const char*>(t.data()), static_cast<size_t>(t.numel()) * sizeof(double));
  }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, size_t end) : buf_(buf), end_(end) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Tensor tensor(std::string& name) {
    name = bytes(get<uint32_t>());
    const auto rank = get<uint32_t>();
    if (rank > 8) throw FormatError("checkpoint: implausible tensor rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) {
      d = get<int64_t>();
      if (d < 0) throw FormatError("checkpoint: negative dimension in " + name);
    }
    const auto n = static_cast<size_t>(shape_numel(shape));
    need(n * sizeof(double));
    std::vector<double> values(n);
    std::memcpy(values.data(), buf_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return Tensor(std::move(shape), std::move(values));
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(size_t n) const {
    if (pos_ + n > end_) throw FormatError("checkpoint: truncated");
  }
  const std::string& buf_;
  size_t end_;
  size_t pos_ = 0;
};

json dims_json(const nets::NetDims& d) {
  return {{"channels", d.channels},       {"patch_size", d.patch_size}, {"feature_dim", d.feature_dim},
          {"latent_dim", d.latent_dim},   {"hidden_dim", d.hidden_dim}, {"encoder_width", d.encoder_width},
          {"stem_cdc_theta", d.stem_cdc_theta}};
}

std::string dims_str(const nets::NetDims& d) {
  std::ostringstream o;
  o << "F=" << d.feature_dim << " L=" << d.latent_dim << " hidden=" << d.hidden_dim << " patch=" << d.patch_size
    << " width=" << d.encoder_width << " channels=" << d.channels;
  return o.str();
}

bool same_dims(const nets::NetDims& a, const nets::NetDims& b) {
  return a.channels == b.channels && a.patch_size == b.patch_size && a.feature_dim == b.feature_dim &&
         a.latent_dim == b.latent_dim && a.hidden_dim == b.hidden_dim && a.encoder_width == b.encoder_width &&
         a.stem_cdc_theta == b.stem_cdc_theta;
}

}  // namespace

void save_checkpoint(const ModelState& s, const std::filesystem::path& path) {
  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["dims"] = dims_json(s.config.dims);
  manifest["config"] = to_json(s.config);
  manifest["epoch"] = s.epoch;
  manifest["seed"] = s.config.seed;
  manifest["global_step"] = s.global_step;
  // Every random stream is derived from (seed, epoch, stage), so these two fix the RNG state.
  manifest["rng"] = {{"scheme", "derived"}, {"seed", s.config.seed}, {"epoch", s.epoch}};
  manifest["domain_head_ready"] = s.domain_head_ready;
  json frozen = json::array(), adam = json::object();
  for (const auto& name : group_names()) {
    if (s.group(name).frozen()) frozen.push_back(name);
    adam[name] = s.optimizer(name).steps();
  }
  manifest["frozen"] = frozen;
  manifest["adam_steps"] = adam;
  json orders = json::array();
  for (const auto& e : s.bank.entries()) orders.push_back(e.order);
  manifest["bank"] = {{"capacity", s.bank.capacity()},
                      {"delta", s.bank.delta()},
                      {"next_order", s.bank.next_order()},
                      {"orders", orders}};
  manifest["history"] = s.history;

  std::vector<std::pair<std::string, Tensor>> tensors;
  for (const auto& name : group_names()) {
    const auto& g = s.group(name);
    const auto& opt = s.optimizer(name);
    for (size_t i = 0; i < g.params().size(); ++i) {
      const auto& p = g.params()[i];
      tensors.emplace_back("param/" + name + "/" + p.name, p.var.value());
      if (i < opt.first_moments().size()) {
        tensors.emplace_back("adam/" + name + "/m/" + p.name, opt.first_moments()[i]);
        tensors.emplace_back("adam/" + name + "/v/" + p.name, opt.second_moments()[i]);
      }
    }
  }
  const int64_t k = static_cast<int64_t>(s.bank.size());
  Tensor gates({k});
  for (int64_t i = 0; i < k; ++i) gates[i] = s.bank.entries()[static_cast<size_t>(i)].gate;
  tensors.emplace_back("bank/values", k ? s.bank.as_matrix() : Tensor({0, s.config.dims.latent_dim}));
  tensors.emplace_back("bank/gates", gates);
  tensors.emplace_back("state/domain_head_accuracy", Tensor::scalar(s.domain_head_accuracy));

  Writer w;
  w.bytes(std::string(kMagic, sizeof kMagic));
  w.put<uint32_t>(kCheckpointVersion);
  const std::string m = manifest.dump();
  w.put<uint64_t>(m.size());
  w.bytes(m);
  w.put<uint64_t>(tensors.size());
  for (const auto& [name, t] : tensors) w.tensor(name, t);
  w.put<uint64_t>(fnv1a(w.buffer().data(), w.buffer().size()));

  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out.good()) throw Error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<ModelState> load_checkpoint(const std::filesystem::path& path,
                                            const std::optional<nets::NetDims>& expected_dims) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("checkpoint not found: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string();
  if (buf.size() < sizeof kMagic + 4 + 8 + 8 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError(where + ": not a ufda checkpoint");
  }
  uint32_t version;
  std::memcpy(&version, buf.data() + sizeof kMagic, 4);
  if (version != kCheckpointVersion) {
    throw FormatError(where + ": format version " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointVersion));
  }
  const size_t body = buf.size() - 8;
  uint64_t stored;
  std::memcpy(&stored, buf.data() + body, 8);
  if (stored != fnv1a(buf.data(), body)) throw FormatError(where + ": checksum mismatch (corrupt file)");

  Reader r(buf, body);
  r.bytes(sizeof kMagic + 4);
  json manifest;
  try {
    manifest = json::parse(r.bytes(r.get<uint64_t>()));
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad manifest: " + e.what());
  }

  TrainConfig config;
  try {
    config = train_config_from_json(manifest.at("config"));
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad manifest: " + e.what());
  }
  if (expected_dims && !same_dims(*expected_dims, config.dims)) {
    throw DimensionError(where + ": stored dims " + dims_str(config.dims) + " do not match expected " +
                         dims_str(*expected_dims));
  }

  std::map<std::string, Tensor> tensors;
  const auto count = r.get<uint64_t>();
  for (uint64_t i = 0; i < count; ++i) {
    std::string name;
    Tensor t = r.tensor(name);
    tensors.emplace(std::move(name), std::move(t));
  }
  if (!r.done()) throw FormatError(where + ": trailing bytes");

  auto take = [&](const std::string& name) -> Tensor& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError(where + ": missing tensor " + name);
    return it->second;
  };

  auto state = std::make_unique<ModelState>(config);
  try {
    state->epoch = manifest.at("epoch").get<int64_t>();
    state->global_step = manifest.at("global_step").get<int64_t>();
    state->domain_head_ready = manifest.at("domain_head_ready").get<bool>();
    state->history = manifest.at("history").get<std::vector<std::string>>();
    state->domain_head_accuracy = take("state/domain_head_accuracy").item();
    for (const auto& name : group_names()) {
      auto& g = state->group(name);
      auto& opt = state->optimizer(name);
      opt.set_steps(manifest.at("adam_steps").at(name).get<int64_t>());
      std::vector<Tensor> values, m, v;
      for (const auto& p : g.params()) {
        const Tensor& t = take("param/" + name + "/" + p.name);
        if (t.shape() != p.var.shape()) {
          throw DimensionError(where + ": " + name + "/" + p.name + " has shape " + shape_str(t.shape()) +
                               ", expected " + shape_str(p.var.shape()));
        }
        values.push_back(t);
        if (tensors.count("adam/" + name + "/m/" + p.name)) {
          m.push_back(take("adam/" + name + "/m/" + p.name));
          v.push_back(take("adam/" + name + "/v/" + p.name));
        }
      }
      if (!m.empty() && m.size() != g.params().size()) throw FormatError(where + ": partial optimizer state");
      g.restore(values);
      opt.first_moments() = std::move(m);
      opt.second_moments() = std::move(v);
    }
    for (const auto& name : manifest.at("frozen")) state->group(name.get<std::string>()).freeze();

    const auto& bank = manifest.at("bank");
    const auto orders = bank.at("orders").get<std::vector<uint64_t>>();
    const Tensor& values = take("bank/values");
    const Tensor& gates = take("bank/gates");
    const auto k = static_cast<int64_t>(orders.size());
    if (values.rank() != 2 || values.rows() != k || gates.numel() != k ||
        (k && values.cols() != config.dims.latent_dim)) {
      throw FormatError(where + ": inconsistent bank tensors");
    }
    std::deque<liveaug::BankEntry> entries;
    for (int64_t i = 0; i < k; ++i) {
      auto row = values.row(i);
      entries.push_back({std::vector<double>(row.begin(), row.end()), orders[static_cast<size_t>(i)], gates[i]});
    }
    state->bank.restore(std::move(entries), bank.at("next_order").get<uint64_t>());
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad manifest: " + e.what());
  }
  state->set_trainable({});
  return state;
}

}  // namespace ufda::trainer
