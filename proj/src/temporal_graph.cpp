#include "repeatmix/temporal_graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace repeatmix {

TemporalGraph::TemporalGraph(std::vector<Interaction> interactions, NodeId node_count,
                             FeatureTable node_features, FeatureTable edge_features, bool bipartite,
                             NodeId source_count)
    : interactions_(std::move(interactions)),
      node_count_(node_count),
      source_count_(source_count),
      bipartite_(bipartite),
      node_features_(std::move(node_features)),
      edge_features_(std::move(edge_features)) {
  if (node_count_ < 0) throw GraphError("negative node count");
  if (node_features_.rows() != node_count_) {
    throw GraphError("node feature table has " + std::to_string(node_features_.rows()) +
                     " rows, expected " + std::to_string(node_count_));
  }
  if (edge_features_.rows() != static_cast<Eigen::Index>(interactions_.size())) {
    throw GraphError("edge feature table has " + std::to_string(edge_features_.rows()) +
                     " rows, expected " + std::to_string(interactions_.size()));
  }

  std::vector<std::size_t> degree(static_cast<std::size_t>(node_count_) + 1, 0);
  for (std::size_t i = 0; i < interactions_.size(); ++i) {
    const Interaction& e = interactions_[i];
    if (e.edge_index != static_cast<EdgeIndex>(i)) {
      throw GraphError("interaction " + std::to_string(i) + " carries edge_index " +
                       std::to_string(e.edge_index));
    }
    if (!(e.t >= 0.0) || !std::isfinite(e.t)) {
      throw GraphError("interaction " + std::to_string(i) + " has invalid timestamp");
    }
    if (i > 0 && e.t < interactions_[i - 1].t) {
      throw GraphError("interaction " + std::to_string(i) + " breaks chronological order");
    }
    if (e.src < 0 || e.src >= node_count_ || e.dst < 0 || e.dst >= node_count_) {
      throw GraphError("interaction " + std::to_string(i) + " references an unknown node");
    }
    ++degree[static_cast<std::size_t>(e.src) + 1];
    if (e.dst != e.src) ++degree[static_cast<std::size_t>(e.dst) + 1];
  }

  offsets_.assign(degree.size(), 0);
  for (std::size_t n = 1; n < degree.size(); ++n) offsets_[n] = offsets_[n - 1] + degree[n];
  entries_.resize(offsets_.back());

  // Interactions are chronological, so appending in order keeps every
  // history sorted by (t, edge_index).
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const Interaction& e : interactions_) {
    entries_[cursor[static_cast<std::size_t>(e.src)]++] = {e.dst, e.t, e.edge_index};
    if (e.dst != e.src) entries_[cursor[static_cast<std::size_t>(e.dst)]++] = {e.src, e.t, e.edge_index};
  }
}

void TemporalGraph::check_node(NodeId n) const {
  if (n < 0 || n >= node_count_) {
    throw GraphError("unknown node id " + std::to_string(n));
  }
}

std::span<const HistoryEntry> TemporalGraph::history(NodeId n) const {
  check_node(n);
  const auto i = static_cast<std::size_t>(n);
  return {entries_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

std::span<const HistoryEntry> TemporalGraph::history_before(NodeId n, Cutoff cutoff) const {
  const auto full = history(n);
  const auto by_time = std::lower_bound(full.begin(), full.end(), cutoff.t,
                                        [](const HistoryEntry& h, Timestamp t) { return h.t < t; });
  auto end = by_time;
  if (cutoff.edge_limit != kNoEdgeLimit) {
    end = std::lower_bound(full.begin(), by_time, cutoff.edge_limit,
                           [](const HistoryEntry& h, EdgeIndex e) { return h.edge_index < e; });
  }
  const auto count = static_cast<std::size_t>(end - full.begin());
  if (probe_ != nullptr && count > 0) probe_->observe(full[count - 1].edge_index);
  return full.first(count);
}

std::vector<std::size_t> TemporalGraph::occurrence_positions(NodeId n, NodeId counterpart,
                                                             Cutoff cutoff) const {
  const auto visible = history_before(n, cutoff);
  std::vector<std::size_t> positions;
  for (std::size_t p = 0; p < visible.size(); ++p) {
    if (visible[p].counterpart == counterpart) positions.push_back(p);
  }
  return positions;
}

bool SplitView::is_new_node(NodeId n) const {
  return std::binary_search(new_nodes.begin(), new_nodes.end(), n);
}

SplitView chronological_split(const TemporalGraph& g, SplitRatios ratios) {
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw GraphError("split ratios must sum to 1");
  }
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
    throw GraphError("split ratios must be non-negative");
  }
  const auto total = static_cast<EdgeIndex>(g.interaction_count());
  if (total < 10) throw GraphError("chronological split needs at least 10 interactions");

  // Rounding leftovers go to train.
  const auto n_test = static_cast<EdgeIndex>(std::floor(ratios.test * static_cast<double>(total) + 1e-9));
  const auto n_val = static_cast<EdgeIndex>(std::floor(ratios.val * static_cast<double>(total) + 1e-9));
  SplitView split;
  split.train = {0, total - n_val - n_test};
  split.val = {split.train.end, total - n_test};
  split.test = {split.val.end, total};

  std::vector<EdgeIndex> first_seen(static_cast<std::size_t>(g.node_count()), -1);
  for (const Interaction& e : g.interactions()) {
    for (NodeId n : {e.src, e.dst}) {
      auto& f = first_seen[static_cast<std::size_t>(n)];
      if (f < 0) f = e.edge_index;
    }
  }
  for (NodeId n = 0; n < g.node_count(); ++n) {
    if (first_seen[static_cast<std::size_t>(n)] >= split.train.end) split.new_nodes.push_back(n);
  }
  return split;
}

}  // namespace repeatmix
