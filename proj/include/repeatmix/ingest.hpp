#pragma once

#include "repeatmix/temporal_graph.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace repeatmix {

/// Parse failure carrying the 1-based line number of the offending row
/// (0 when the failure is not tied to a line).
class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class HeaderMode { absent, present, detect };

struct IngestConfig {
  HeaderMode header = HeaderMode::detect;
  bool bipartite = false;
  Eigen::Index edge_feature_dim = 172;
  Eigen::Index node_feature_dim = 172;
};

/// Reads `src,dst,timestamp,label[,f_1,...,f_k]` rows. Node ids are remapped
/// to a dense range (bipartite destinations follow all sources), rows are
/// stably sorted by timestamp and feature columns are zero-padded or
/// truncated to `edge_feature_dim`.
TemporalGraph ingest_csv(std::istream& edges, const IngestConfig& config,
                         std::istream* node_features = nullptr);

/// Writes the graph back as an edge CSV using the ingested (dense) ids, with
/// bipartite destination ids shifted back by the source count. Reals use the
/// shortest round-tripping representation.
void write_csv(const TemporalGraph& g, std::ostream& out);

/// Fraction of interactions whose (src, dst) pair occurred earlier.
double repeat_behavior_ratio(const TemporalGraph& g);

inline constexpr std::uint32_t kGraphCacheVersion = 1;

void save_graph_cache(const TemporalGraph& g, std::ostream& out);
void save_graph_cache(const TemporalGraph& g, const std::filesystem::path& path);
TemporalGraph load_graph_cache(std::istream& in);
TemporalGraph load_graph_cache(const std::filesystem::path& path);

}  // namespace repeatmix
