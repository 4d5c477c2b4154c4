#include "itosr/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

namespace itosr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("bad value '" + v + "' for key '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean '" + v + "' for key '" + key + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct KeySpec {
  std::string name;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define ITOSR_INT_KEY(NAME, FIELD)                                                       \
  KeySpec{NAME, [](PipelineConfig& c, const std::string& v) { c.FIELD = parse_value<int>(NAME, v); }, \
          [](const PipelineConfig& c) { return std::to_string(c.FIELD); }}
#define ITOSR_DOUBLE_KEY(NAME, FIELD)                                                          \
  KeySpec{NAME, [](PipelineConfig& c, const std::string& v) { c.FIELD = parse_value<double>(NAME, v); }, \
          [](const PipelineConfig& c) { return fmt(c.FIELD); }}
#define ITOSR_BOOL_KEY(NAME, FIELD)                                                   \
  KeySpec{NAME, [](PipelineConfig& c, const std::string& v) { c.FIELD = parse_bool(NAME, v); }, \
          [](const PipelineConfig& c) { return std::string(c.FIELD ? "true" : "false"); }}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      ITOSR_INT_KEY("iterations", iterations),
      ITOSR_DOUBLE_KEY("alpha", alpha),
      ITOSR_INT_KEY("k", k),
      ITOSR_DOUBLE_KEY("lambda", gan.lambda),
      ITOSR_DOUBLE_KEY("lr_embedder", baseline.lr_embedder),
      ITOSR_DOUBLE_KEY("lr_head", baseline.lr_head),
      ITOSR_DOUBLE_KEY("lr_gan", gan.lr),
      ITOSR_INT_KEY("baseline_epochs", baseline.epochs),
      ITOSR_INT_KEY("baseline_batch", baseline.batch),
      ITOSR_INT_KEY("hidden", baseline.hidden),
      ITOSR_INT_KEY("latent", baseline.latent),
      ITOSR_INT_KEY("gan_epochs", gan.epochs),
      ITOSR_INT_KEY("gan_batch", gan.batch),
      ITOSR_INT_KEY("n_critic", gan.n_critic),
      ITOSR_INT_KEY("noise_dim", gan.noise_dim),
      ITOSR_INT_KEY("gan_hidden", gan.hidden),
      ITOSR_DOUBLE_KEY("clip_bound", gan.clip_bound),
      ITOSR_BOOL_KEY("use_dual_space_sampling", use_dual_space_sampling),
      ITOSR_BOOL_KEY("use_d2", gan.use_d2),
      ITOSR_BOOL_KEY("use_c2", gan.use_c2),
      ITOSR_BOOL_KEY("generator_cls", gan.generator_cls),
      KeySpec{"update_from",
              [](PipelineConfig& c, const std::string& v) {
                if (v == "previous") c.update_from = UpdateSource::kPrevious;
                else if (v == "initial") c.update_from = UpdateSource::kInitial;
                else throw ConfigError("update_from must be 'previous' or 'initial'");
              },
              [](const PipelineConfig& c) { return std::string(to_string(c.update_from)); }},
      KeySpec{"head_init",
              [](PipelineConfig& c, const std::string& v) {
                if (v == "reinit") c.head_init = HeadInit::kReinit;
                else if (v == "finetune") c.head_init = HeadInit::kFinetune;
                else throw ConfigError("head_init must be 'reinit' or 'finetune'");
              },
              [](const PipelineConfig& c) { return std::string(to_string(c.head_init)); }},
      KeySpec{"seed",
              [](PipelineConfig& c, const std::string& v) { c.seed = parse_value<std::uint64_t>("seed", v); },
              [](const PipelineConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

#undef ITOSR_INT_KEY
#undef ITOSR_DOUBLE_KEY
#undef ITOSR_BOOL_KEY

const KeySpec& find_key(const std::string& key) {
  const auto& t = key_table();
  auto it = std::find_if(t.begin(), t.end(), [&](const KeySpec& k) { return k.name == key; });
  if (it == t.end()) throw ConfigError("unknown config key '" + key + "'");
  return *it;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& spec : key_table()) k.push_back(spec.name);
    return k;
  }();
  return keys;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in,
                                                                  const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    find_key(key);
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, value);
}

PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  for (const auto& [k, v] : parse_key_values(in, path.string())) apply_setting(base, k, v);
  return base;
}

std::vector<std::pair<std::string, std::string>> describe(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& spec : key_table()) out.emplace_back(spec.name, spec.get(cfg));
  return out;
}

}  // namespace itosr
