#include "repeatmix/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace repeatmix {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid boolean '" + value + "' for '" + key + "'");
}

std::string ablation_text(const Ablations& a) {
  std::vector<std::string> parts;
  if (a.no_time_encoding) parts.emplace_back("no-te");
  if (a.no_segment_embedding) parts.emplace_back("no-se");
  if (a.separate_encoding) parts.emplace_back("sep-e");
  if (parts.empty()) return "none";
  std::string s = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) s += "," + parts[i];
  return s;
}

Ablations parse_ablations(const std::string& value) {
  Ablations a;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "none" || item.empty()) continue;
    if (item == "no-te") a.no_time_encoding = true;
    else if (item == "no-se") a.no_segment_embedding = true;
    else if (item == "sep-e") a.separate_encoding = true;
    else throw ConfigError("unknown ablation '" + item + "'");
  }
  return a;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  bool structural = false;
};

#define RMX_INT_FIELD(key, member, structural)                                                       \
  {key,                                                                                           \
   {[](const RunConfig& c) { return std::to_string(c.member); },                                  \
    [](RunConfig& c, const std::string& k, const std::string& v) {                                \
      c.member = parse_number<std::remove_reference_t<decltype(c.member)>>(k, v);                 \
    },                                                                                            \
    structural}}
#define RMX_DOUBLE_FIELD(key, member, structural)                                                    \
  {key,                                                                                           \
   {[](const RunConfig& c) { return format_double(c.member); },                                   \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_number<double>(k, v); }, \
    structural}}
#define RMX_STRING_FIELD(key, member)                                                                \
  {key, {[](const RunConfig& c) { return c.member; }, [](RunConfig& c, const std::string&, const std::string& v) { c.member = v; }, false}}
#define RMX_BOOL_FIELD(key, member, structural)                                                      \
  {key,                                                                                           \
   {[](const RunConfig& c) { return std::string(c.member ? "true" : "false"); },                  \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_bool(k, v); }, \
    structural}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      RMX_STRING_FIELD("dataset", dataset),
      RMX_STRING_FIELD("dataset_name", dataset_name),
      RMX_STRING_FIELD("node_features", node_features),
      RMX_STRING_FIELD("cache", cache),
      RMX_STRING_FIELD("out", out),
      RMX_INT_FIELD("seed", seed, false),
      RMX_BOOL_FIELD("bipartite", bipartite, false),
      RMX_INT_FIELD("ingest.edge_dim", ingest_edge_dim, false),
      RMX_INT_FIELD("ingest.node_dim", ingest_node_dim, false),
      RMX_INT_FIELD("sampler.k", model.encoder.K, true),
      RMX_INT_FIELD("sampler.window", model.sampler.W, false),
      RMX_INT_FIELD("sampler.repeats", model.sampler.R, false),
      RMX_INT_FIELD("sampler.second_order_nodes", model.sampler.M, false),
      RMX_DOUBLE_FIELD("sampler.time_aware_alpha", model.sampler.alpha_time_aware, false),
      {"sampler.strategy",
       {[](const RunConfig& c) { return std::string(to_string(c.model.model.first_order_strategy)); },
        [](RunConfig& c, const std::string&, const std::string& v) {
          c.model.model.first_order_strategy = parse_strategy(v);
          if (c.model.model.first_order_strategy == Strategy::repeat_second) {
            throw ConfigError("sampler.strategy must be a first-order strategy");
          }
        },
        false}},
      RMX_INT_FIELD("encoder.time_dim", model.encoder.time.d_T, true),
      RMX_DOUBLE_FIELD("encoder.time_alpha", model.encoder.time.alpha, false),
      RMX_DOUBLE_FIELD("encoder.time_beta", model.encoder.time.beta, false),
      RMX_INT_FIELD("encoder.segment_dim", model.encoder.d_segment, true),
      RMX_INT_FIELD("mixer.layers", model.mixer.layers, true),
      RMX_INT_FIELD("mixer.d_model", model.mixer.d_model, true),
      RMX_DOUBLE_FIELD("mixer.theta_token", model.mixer.theta_o, true),
      RMX_DOUBLE_FIELD("mixer.theta_channel", model.mixer.theta_c, true),
      RMX_DOUBLE_FIELD("mixer.ln_eps", model.mixer.ln_eps, false),
      {"model",
       {[](const RunConfig& c) { return std::string(c.model.model.use_second_order ? "repeatmixer" : "repeatmixer-f"); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "repeatmixer") c.model.model.use_second_order = true;
          else if (v == "repeatmixer-f") c.model.model.use_second_order = false;
          else throw ConfigError("invalid value '" + v + "' for '" + k + "'");
        },
        true}},
      {"model.fusion",
       {[](const RunConfig& c) { return std::string(to_string(c.model.model.fusion)); },
        [](RunConfig& c, const std::string&, const std::string& v) { c.model.model.fusion = parse_fusion(v); }, true}},
      {"model.ablation",
       {[](const RunConfig& c) { return ablation_text(c.model.model.ablations); },
        [](RunConfig& c, const std::string&, const std::string& v) { c.model.model.ablations = parse_ablations(v); },
        true}},
      RMX_INT_FIELD("train.epochs", train.epochs, false),
      RMX_INT_FIELD("train.patience", train.patience, false),
      RMX_INT_FIELD("train.batch_size", train.batch_size, false),
      RMX_DOUBLE_FIELD("train.lr", train.lr, false),
      RMX_BOOL_FIELD("train.wall_clock", train.record_wall_clock, false),
      {"eval.neg",
       {[](const RunConfig& c) { return std::string(to_string(c.train.eval_strategy)); },
        [](RunConfig& c, const std::string&, const std::string& v) { c.train.eval_strategy = parse_negative_strategy(v); },
        false}},
      RMX_BOOL_FIELD("eval.inductive", train.inductive, false),
  };
  return table;
}

#undef RMX_INT_FIELD
#undef RMX_DOUBLE_FIELD
#undef RMX_STRING_FIELD
#undef RMX_BOOL_FIELD

void set_field(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = fields();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(cfg, key, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("invalid value '" + value + "' for '" + key + "': " + e.what());
  }
}

}  // namespace

ConfigEntries parse_config_text(std::istream& in) {
  ConfigEntries out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    auto key = trim(std::string_view(body).substr(0, eq));
    auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

ConfigEntries read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config_text(in);
}

void apply_entries(RunConfig& cfg, const ConfigEntries& entries) {
  for (const auto& [k, v] : entries) set_field(cfg, k, v);
}

std::string serialize(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(cfg) + "\n";
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  std::istringstream in(text);
  RunConfig cfg;
  apply_entries(cfg, parse_config_text(in));
  return cfg;
}

void apply_dataset_defaults(RunConfig& cfg, const std::string& name) {
  struct Defaults {
    int K;
    bool bipartite;
  };
  static const std::map<std::string, Defaults> table = {
      {"wikipedia", {30, true}}, {"reddit", {10, true}}, {"mooc", {64, true}},
      {"lastfm", {10, true}},    {"enron", {16, false}}, {"uci", {32, false}},
  };
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  auto it = table.find(lower);
  if (it == table.end()) return;
  cfg.model.encoder.K = it->second.K;
  cfg.bipartite = it->second.bipartite;
}

std::string infer_dataset_name(const std::string& path) {
  if (path.empty()) return {};
  std::string stem = std::filesystem::path(path).stem().string();
  // ml_uci.csv and similar benchmark file names
  if (stem.rfind("ml_", 0) == 0) stem = stem.substr(3);
  return stem;
}

RunConfig resolve_run_config(const ConfigEntries& file_entries, const ConfigEntries& cli_entries) {
  std::string name, dataset;
  bool alpha_set = false, beta_set = false;
  for (const auto* list : {&file_entries, &cli_entries}) {
    for (const auto& [k, v] : *list) {
      if (k == "dataset_name") name = v;
      if (k == "dataset") dataset = v;
      alpha_set = alpha_set || k == "encoder.time_alpha";
      beta_set = beta_set || k == "encoder.time_beta";
    }
  }
  if (name.empty()) name = infer_dataset_name(dataset);
  RunConfig cfg;
  apply_dataset_defaults(cfg, name);
  apply_entries(cfg, file_entries);
  apply_entries(cfg, cli_entries);
  if (cfg.dataset_name.empty()) cfg.dataset_name = name;
  // frequencies follow the width unless given explicitly
  const auto scaled = TimeEncoderConfig::with_dim(cfg.model.encoder.time.d_T);
  if (!alpha_set) cfg.model.encoder.time.alpha = scaled.alpha;
  if (!beta_set) cfg.model.encoder.time.beta = scaled.beta;
  if (cfg.train.patience > cfg.train.epochs) cfg.train.patience = cfg.train.epochs;
  return cfg;
}

const std::vector<std::string>& structural_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, field] : fields()) {
      if (field.structural) k.push_back(key);
    }
    return k;
  }();
  return keys;
}

std::string config_value(const RunConfig& cfg, const std::string& key) {
  auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.get(cfg);
}

}  // namespace repeatmix
