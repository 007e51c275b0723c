#pragma once

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace repeatmix {

using NodeId = std::int64_t;
using EdgeIndex = std::int64_t;
using Timestamp = double;

/// Row-major real table used for node and edge features.
using FeatureTable = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr EdgeIndex kNoEdgeLimit = std::numeric_limits<EdgeIndex>::max();

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interaction {
  NodeId src = 0;
  NodeId dst = 0;
  Timestamp t = 0.0;
  EdgeIndex edge_index = 0;
  std::optional<double> label;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// One event in a node's history, seen from that node.
struct HistoryEntry {
  NodeId counterpart = 0;
  Timestamp t = 0.0;
  EdgeIndex edge_index = 0;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

/// Chronological order on events: timestamp first, then global edge order.
inline bool chronologically_before(const HistoryEntry& a, const HistoryEntry& b) {
  if (a.t != b.t) return a.t < b.t;
  return a.edge_index < b.edge_index;
}

/// Visibility bound for history lookups. An entry is visible when its
/// timestamp is strictly below `t` and its edge index is below `edge_limit`.
struct Cutoff {
  Timestamp t = std::numeric_limits<Timestamp>::infinity();
  EdgeIndex edge_limit = kNoEdgeLimit;

  Cutoff() = default;
  Cutoff(Timestamp time) : t(time) {}  // NOLINT(google-explicit-constructor)
  Cutoff(Timestamp time, EdgeIndex limit) : t(time), edge_limit(limit) {}
};

/// Records the largest edge index handed out by history lookups. Used by
/// tests to prove that training never looks past the current batch.
struct AccessProbe {
  std::atomic<EdgeIndex> max_edge_index{-1};

  void observe(EdgeIndex e) {
    EdgeIndex cur = max_edge_index.load(std::memory_order_relaxed);
    while (e > cur && !max_edge_index.compare_exchange_weak(cur, e, std::memory_order_relaxed)) {
    }
  }
  void reset() { max_edge_index.store(-1); }
};

/// Immutable chronological edge store. Every interaction is recorded in the
/// histories of both endpoints (once for self-loops); each history is sorted
/// by (t, edge_index), which is also edge-index order.
class TemporalGraph {
 public:
  TemporalGraph() = default;

  /// `source_count` is the number of source-side ids for bipartite graphs
  /// (destination ids start there); for other graphs pass `node_count`.
  TemporalGraph(std::vector<Interaction> interactions, NodeId node_count, FeatureTable node_features,
                FeatureTable edge_features, bool bipartite, NodeId source_count);

  [[nodiscard]] NodeId node_count() const { return node_count_; }
  [[nodiscard]] std::size_t interaction_count() const { return interactions_.size(); }
  [[nodiscard]] const std::vector<Interaction>& interactions() const { return interactions_; }
  [[nodiscard]] const Interaction& interaction(EdgeIndex e) const {
    return interactions_.at(static_cast<std::size_t>(e));
  }
  [[nodiscard]] const FeatureTable& node_features() const { return node_features_; }
  [[nodiscard]] const FeatureTable& edge_features() const { return edge_features_; }
  [[nodiscard]] Eigen::Index node_feature_dim() const { return node_features_.cols(); }
  [[nodiscard]] Eigen::Index edge_feature_dim() const { return edge_features_.cols(); }
  [[nodiscard]] bool bipartite() const { return bipartite_; }
  [[nodiscard]] NodeId source_count() const { return source_count_; }

  /// Full chronological history of `n`.
  [[nodiscard]] std::span<const HistoryEntry> history(NodeId n) const;

  /// Prefix of `n`'s history visible under `cutoff` (binary search).
  [[nodiscard]] std::span<const HistoryEntry> history_before(NodeId n, Cutoff cutoff) const;

  /// Positions in `n`'s history where `counterpart` occurs before `cutoff`.
  [[nodiscard]] std::vector<std::size_t> occurrence_positions(NodeId n, NodeId counterpart,
                                                              Cutoff cutoff) const;

  /// Not thread-safe to change while lookups are in flight.
  void set_access_probe(AccessProbe* probe) const { probe_ = probe; }

 private:
  void check_node(NodeId n) const;

  std::vector<Interaction> interactions_;
  NodeId node_count_ = 0;
  NodeId source_count_ = 0;
  bool bipartite_ = false;
  FeatureTable node_features_;
  FeatureTable edge_features_;
  std::vector<std::size_t> offsets_{0};
  std::vector<HistoryEntry> entries_;
  mutable AccessProbe* probe_ = nullptr;
};

/// Chronological train/validation/test partition of interaction indices.
struct IndexRange {
  EdgeIndex begin = 0;
  EdgeIndex end = 0;

  [[nodiscard]] EdgeIndex size() const { return end - begin; }
  [[nodiscard]] bool contains(EdgeIndex e) const { return e >= begin && e < end; }
};

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct SplitView {
  IndexRange train;
  IndexRange val;
  IndexRange test;
  /// Nodes whose first interaction lies at or after `train.end`, ascending.
  std::vector<NodeId> new_nodes;

  [[nodiscard]] bool is_new_node(NodeId n) const;
};

SplitView chronological_split(const TemporalGraph& g, SplitRatios ratios = {});

}  // namespace repeatmix
