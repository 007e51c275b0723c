#include "repeatmix/sampler.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace repeatmix {
namespace {

// Total order used for every sampled sequence; counterpart breaks the tie
// between the two views of one edge that second-order sampling can collect.
bool sample_order(const HistoryEntry& a, const HistoryEntry& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.edge_index != b.edge_index) return a.edge_index < b.edge_index;
  return a.counterpart < b.counterpart;
}

NeighborSample make_sample(NodeId n, Cutoff cutoff, Strategy s) {
  NeighborSample out;
  out.query_node = n;
  out.query_time = cutoff.t;
  out.strategy = s;
  return out;
}

void sort_and_truncate(std::vector<HistoryEntry>& entries, int K) {
  std::stable_sort(entries.begin(), entries.end(), sample_order);
  const auto keep = static_cast<std::size_t>(K);
  if (entries.size() > keep) entries.erase(entries.begin(), entries.end() - static_cast<std::ptrdiff_t>(keep));
}

// Appends the W-1 predecessors of position `p` in `history`.
void collect_window(std::span<const HistoryEntry> history, std::size_t p, int W, std::vector<HistoryEntry>& out) {
  for (int back = 1; back < W; ++back) {
    if (p < static_cast<std::size_t>(back)) break;
    out.push_back(history[p - static_cast<std::size_t>(back)]);
  }
}

void check_k(int K) {
  if (K < 1) throw std::invalid_argument("sequence length K must be >= 1");
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::recent: return "recent";
    case Strategy::uniform: return "uniform";
    case Strategy::time_aware: return "time-aware";
    case Strategy::repeat_first: return "repeat";
    case Strategy::repeat_second: return "repeat-second";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "recent") return Strategy::recent;
  if (name == "uniform") return Strategy::uniform;
  if (name == "time-aware" || name == "time_aware") return Strategy::time_aware;
  if (name == "repeat" || name == "repeat-first" || name == "repeat_first") return Strategy::repeat_first;
  if (name == "repeat-second" || name == "repeat_second") return Strategy::repeat_second;
  throw std::invalid_argument("unknown sampling strategy '" + std::string(name) + "'");
}

void SamplerConfig::validate() const {
  if (K < 1 || W < 1 || R < 1 || M < 1) throw std::invalid_argument("sampler K, W, R, M must all be >= 1");
  if (!(alpha_time_aware >= 0.0 && alpha_time_aware <= 1.0)) {
    throw std::invalid_argument("time-aware alpha must lie in [0, 1]");
  }
}

NeighborSample sample_recent(const TemporalGraph& g, NodeId n, Cutoff cutoff, int K) {
  check_k(K);
  auto out = make_sample(n, cutoff, Strategy::recent);
  const auto visible = g.history_before(n, cutoff);
  const auto take = std::min(visible.size(), static_cast<std::size_t>(K));
  out.entries.assign(visible.end() - static_cast<std::ptrdiff_t>(take), visible.end());
  return out;
}

NeighborSample sample_uniform(const TemporalGraph& g, NodeId n, Cutoff cutoff, int K, SamplerRng& rng) {
  check_k(K);
  auto out = make_sample(n, cutoff, Strategy::uniform);
  const auto visible = g.history_before(n, cutoff);
  // Selection sampling keeps source order, which is chronological.
  std::sample(visible.begin(), visible.end(), std::back_inserter(out.entries), K, rng);
  return out;
}

NeighborSample sample_time_aware(const TemporalGraph& g, NodeId n, Cutoff cutoff, int K, double alpha,
                                 SamplerRng& rng) {
  check_k(K);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("time-aware alpha must lie in [0, 1]");
  auto out = make_sample(n, cutoff, Strategy::time_aware);
  const auto visible = g.history_before(n, cutoff);
  std::vector<std::size_t> remaining(visible.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  std::bernoulli_distribution pick_uniform(alpha);
  std::vector<std::size_t> taken;
  while (!remaining.empty() && taken.size() < static_cast<std::size_t>(K)) {
    std::size_t slot = remaining.size() - 1;
    if (pick_uniform(rng)) {
      slot = std::uniform_int_distribution<std::size_t>(0, remaining.size() - 1)(rng);
    }
    taken.push_back(remaining[slot]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(slot));
  }
  std::sort(taken.begin(), taken.end());
  for (auto i : taken) out.entries.push_back(visible[i]);
  return out;
}

NeighborSample sample_repeat_first(const TemporalGraph& g, NodeId u, NodeId v, Cutoff cutoff,
                                   const SamplerConfig& cfg) {
  cfg.validate();
  const auto visible = g.history_before(u, cutoff);
  std::vector<HistoryEntry> collected;
  int used = 0;
  for (std::size_t p = visible.size(); p-- > 0 && used < cfg.R;) {
    if (visible[p].counterpart != v) continue;
    ++used;
    collect_window(visible, p, cfg.W, collected);
  }
  if (collected.empty()) return sample_recent(g, u, cutoff, cfg.K);
  auto out = make_sample(u, cutoff, Strategy::repeat_first);
  sort_and_truncate(collected, cfg.K);
  out.entries = std::move(collected);
  return out;
}

std::vector<NodeId> recent_distinct_counterparts(const NeighborSample& s, int M) {
  std::vector<NodeId> nodes;
  for (auto it = s.entries.rbegin(); it != s.entries.rend() && nodes.size() < static_cast<std::size_t>(M); ++it) {
    if (std::find(nodes.begin(), nodes.end(), it->counterpart) == nodes.end()) nodes.push_back(it->counterpart);
  }
  return nodes;
}

NeighborSample sample_repeat_second(const TemporalGraph& g, NodeId u, const NeighborSample& first_u,
                                    const NeighborSample& first_v, Cutoff cutoff, const SamplerConfig& cfg) {
  cfg.validate();
  const auto repeat_nodes = recent_distinct_counterparts(first_v, cfg.M);
  std::vector<HistoryEntry> collected;
  if (!repeat_nodes.empty()) {
    std::vector<NodeId> hops;
    hops.reserve(first_u.entries.size());
    for (const auto& e : first_u.entries) hops.push_back(e.counterpart);
    std::sort(hops.begin(), hops.end());
    hops.erase(std::unique(hops.begin(), hops.end()), hops.end());

    std::unordered_map<NodeId, int> used;
    for (NodeId m : hops) {
      const auto visible = g.history_before(m, cutoff);
      used.clear();
      for (NodeId j : repeat_nodes) used.emplace(j, 0);
      for (std::size_t p = visible.size(); p-- > 0;) {
        auto it = used.find(visible[p].counterpart);
        if (it == used.end() || it->second >= cfg.R) continue;
        ++it->second;
        collect_window(visible, p, cfg.W, collected);
      }
    }
  }
  if (collected.empty()) return sample_recent(g, u, cutoff, cfg.K);
  auto out = make_sample(u, cutoff, Strategy::repeat_second);
  sort_and_truncate(collected, cfg.K);
  out.entries = std::move(collected);
  return out;
}

NeighborSample sample_repeat_second(const TemporalGraph& g, NodeId u, NodeId v, Cutoff cutoff,
                                    const SamplerConfig& cfg) {
  const auto first_u = sample_repeat_first(g, u, v, cutoff, cfg);
  const auto first_v = sample_repeat_first(g, v, u, cutoff, cfg);
  return sample_repeat_second(g, u, first_u, first_v, cutoff, cfg);
}

std::vector<double> interval_sequence(const NeighborSample& s, Timestamp t, int K) {
  check_k(K);
  if (s.entries.size() > static_cast<std::size_t>(K)) {
    throw std::invalid_argument("sample longer than K");
  }
  std::vector<double> gaps(static_cast<std::size_t>(K), 0.0);
  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    if (!(s.entries[i].t < t)) {
      throw std::invalid_argument("interval_sequence: sampled event is not strictly before the query time");
    }
    gaps[i] = t - s.entries[i].t;
  }
  return gaps;
}

NeighborSample sample_first_order(const TemporalGraph& g, Strategy strategy, NodeId u, NodeId v, Cutoff cutoff,
                                  const SamplerConfig& cfg, SamplerRng& rng) {
  switch (strategy) {
    case Strategy::recent: return sample_recent(g, u, cutoff, cfg.K);
    case Strategy::uniform: return sample_uniform(g, u, cutoff, cfg.K, rng);
    case Strategy::time_aware: return sample_time_aware(g, u, cutoff, cfg.K, cfg.alpha_time_aware, rng);
    case Strategy::repeat_first: return sample_repeat_first(g, u, v, cutoff, cfg);
    case Strategy::repeat_second: break;
  }
  throw std::invalid_argument("repeat-second is not a first-order strategy");
}

}  // namespace repeatmix
