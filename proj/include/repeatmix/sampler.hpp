#pragma once

#include "repeatmix/temporal_graph.hpp"

#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace repeatmix {

enum class Strategy { recent, uniform, time_aware, repeat_first, repeat_second };

std::string_view to_string(Strategy s);
/// Accepts "recent", "uniform", "time-aware", "repeat" (first order) and
/// "repeat-second".
Strategy parse_strategy(std::string_view name);

struct SamplerConfig {
  int K = 32;  ///< sequence length after truncation
  int W = 5;   ///< slide window
  int R = 10;  ///< most recent repeat occurrences searched per repeat-aware node
  int M = 10;  ///< second-order repeat-aware node budget
  double alpha_time_aware = 0.2;

  void validate() const;
};

struct NeighborSample {
  std::vector<HistoryEntry> entries;
  NodeId query_node = 0;
  Timestamp query_time = 0.0;
  Strategy strategy = Strategy::recent;
};

using SamplerRng = std::mt19937_64;

NeighborSample sample_recent(const TemporalGraph& g, NodeId n, Cutoff cutoff, int K);

NeighborSample sample_uniform(const TemporalGraph& g, NodeId n, Cutoff cutoff, int K, SamplerRng& rng);

/// Each slot takes the most recent untaken entry with probability 1 - alpha,
/// otherwise a uniformly chosen untaken entry.
NeighborSample sample_time_aware(const TemporalGraph& g, NodeId n, Cutoff cutoff, int K, double alpha,
                                 SamplerRng& rng);

/// First-order repeat-aware sequence of `u` with respect to `v`: the W-1
/// predecessors of each of the R most recent occurrences of `v` in `u`'s
/// history, sorted and truncated to the most recent K. Falls back to the
/// recent sequence when nothing is collected.
NeighborSample sample_repeat_first(const TemporalGraph& g, NodeId u, NodeId v, Cutoff cutoff,
                                   const SamplerConfig& cfg);

/// Second-order repeat-aware sequence of `u` with respect to `v`.
NeighborSample sample_repeat_second(const TemporalGraph& g, NodeId u, NodeId v, Cutoff cutoff,
                                    const SamplerConfig& cfg);

/// Same as `sample_repeat_second` reusing already computed first-order
/// sequences of `u` (w.r.t. v) and `v` (w.r.t. u).
NeighborSample sample_repeat_second(const TemporalGraph& g, NodeId u, const NeighborSample& first_u,
                                    const NeighborSample& first_v, Cutoff cutoff, const SamplerConfig& cfg);

/// The most recent `M` distinct counterparts of a sequence, newest first.
std::vector<NodeId> recent_distinct_counterparts(const NeighborSample& s, int M);

/// Time gaps `t - entry.t` in sample order, zero-padded to length K.
std::vector<double> interval_sequence(const NeighborSample& s, Timestamp t, int K);

/// Dispatch for the single-node strategies (recent, uniform, time-aware) and
/// the first-order repeat-aware strategy.
NeighborSample sample_first_order(const TemporalGraph& g, Strategy strategy, NodeId u, NodeId v, Cutoff cutoff,
                                  const SamplerConfig& cfg, SamplerRng& rng);

}  // namespace repeatmix
