#pragma once

#include "repeatmix/temporal_graph.hpp"

#include <random>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace repeatmix {

enum class NegativeStrategy { rnd, hist, ind };

std::string_view to_string(NegativeStrategy s);
NegativeStrategy parse_negative_strategy(std::string_view name);

struct NegativeDraw {
  NodeId dst = 0;
  bool fallback = false;  ///< hist/ind had no candidate and used rnd
};

/// Negative destinations for positive interactions (u, v, t). Every strategy
/// keeps u and t and avoids returning v whenever another candidate exists.
///   rnd:  uniform over all destination nodes
///   hist: destinations u reached before t, minus those it reaches at t
///   ind:  destinations u reaches only in the evaluation span (after train)
class NegativeSampler {
 public:
  NegativeSampler(const TemporalGraph& g, const SplitView& split);

  NegativeDraw draw(NegativeStrategy strategy, const Interaction& positive, std::mt19937_64& rng) const;

  [[nodiscard]] const std::vector<NodeId>& destinations() const { return destinations_; }

 private:
  NegativeDraw draw_random(const Interaction& positive, std::mt19937_64& rng) const;
  static NodeId pick_excluding(const std::vector<NodeId>& pool, NodeId avoid, std::mt19937_64& rng, bool& ok);

  struct PairSeen {
    Timestamp first_t;
    NodeId dst;
  };
  struct Event {
    Timestamp t;
    NodeId dst;
  };

  std::vector<NodeId> destinations_;
  std::unordered_map<NodeId, std::vector<PairSeen>> first_seen_;  // per source, by first_t
  std::unordered_map<NodeId, std::vector<Event>> events_;         // per source, chronological
  std::unordered_map<NodeId, std::vector<NodeId>> eval_only_;     // per source, ascending
};

}  // namespace repeatmix
