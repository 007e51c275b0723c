#pragma once

#include "repeatmix/model.hpp"
#include "repeatmix/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace repeatmix {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string dataset;        ///< interaction CSV
  std::string dataset_name;   ///< picks built-in defaults; derived from the file stem when empty
  std::string node_features;  ///< optional node feature CSV
  std::string cache;          ///< binary graph cache
  std::string out = "out";
  std::uint64_t seed = 0;
  bool bipartite = false;
  Eigen::Index ingest_edge_dim = 172;
  Eigen::Index ingest_node_dim = 172;
  RepeatMixerConfig model;  ///< d_node/d_edge are taken from the graph at run time
  TrainConfig train;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; `#` starts a comment. Duplicate keys keep the last.
ConfigEntries parse_config_text(std::istream& in);
ConfigEntries read_config_file(const std::filesystem::path& path);

/// Applies entries in order. Unknown keys and malformed values throw.
void apply_entries(RunConfig& cfg, const ConfigEntries& entries);

/// Every key with its current value, one `key = value` line each.
std::string serialize(const RunConfig& cfg);
RunConfig parse_run_config(const std::string& text);

/// Known per-dataset defaults (sequence length, bipartite layout).
void apply_dataset_defaults(RunConfig& cfg, const std::string& name);
std::string infer_dataset_name(const std::string& path);

/// built-in < dataset defaults < config file < command line
RunConfig resolve_run_config(const ConfigEntries& file_entries, const ConfigEntries& cli_entries);

/// Keys that fix the parameter layout; a checkpoint only loads into a model
/// whose values agree on all of them.
const std::vector<std::string>& structural_keys();
std::string config_value(const RunConfig& cfg, const std::string& key);

}  // namespace repeatmix
