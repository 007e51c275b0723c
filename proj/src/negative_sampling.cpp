#include "repeatmix/negative_sampling.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace repeatmix {

std::string_view to_string(NegativeStrategy s) {
  switch (s) {
    case NegativeStrategy::rnd: return "rnd";
    case NegativeStrategy::hist: return "hist";
    case NegativeStrategy::ind: return "ind";
  }
  return "unknown";
}

NegativeStrategy parse_negative_strategy(std::string_view name) {
  if (name == "rnd" || name == "random") return NegativeStrategy::rnd;
  if (name == "hist" || name == "historical") return NegativeStrategy::hist;
  if (name == "ind" || name == "inductive") return NegativeStrategy::ind;
  throw std::invalid_argument("unknown negative sampling strategy '" + std::string(name) + "'");
}

NegativeSampler::NegativeSampler(const TemporalGraph& g, const SplitView& split) {
  std::set<NodeId> dsts;
  std::set<std::pair<NodeId, NodeId>> seen;
  std::set<std::pair<NodeId, NodeId>> in_train;
  std::set<std::pair<NodeId, NodeId>> in_eval;
  for (const auto& e : g.interactions()) {
    dsts.insert(e.dst);
    events_[e.src].push_back({e.t, e.dst});
    if (seen.emplace(e.src, e.dst).second) first_seen_[e.src].push_back({e.t, e.dst});
    (split.train.contains(e.edge_index) ? in_train : in_eval).emplace(e.src, e.dst);
  }
  destinations_.assign(dsts.begin(), dsts.end());
  for (const auto& pair : in_eval) {
    if (!in_train.contains(pair)) eval_only_[pair.first].push_back(pair.second);
  }
}

NodeId NegativeSampler::pick_excluding(const std::vector<NodeId>& pool, NodeId avoid, std::mt19937_64& rng, bool& ok) {
  const bool has_avoid = std::binary_search(pool.begin(), pool.end(), avoid);
  const std::size_t usable = pool.size() - (has_avoid ? 1 : 0);
  ok = usable > 0;
  if (!ok) return avoid;
  auto k = std::uniform_int_distribution<std::size_t>(0, usable - 1)(rng);
  if (has_avoid) {
    const auto skip = static_cast<std::size_t>(std::lower_bound(pool.begin(), pool.end(), avoid) - pool.begin());
    if (k >= skip) ++k;
  }
  return pool[k];
}

NegativeDraw NegativeSampler::draw_random(const Interaction& positive, std::mt19937_64& rng) const {
  if (destinations_.empty()) throw std::logic_error("no destination nodes to sample from");
  bool ok = false;
  const NodeId dst = pick_excluding(destinations_, positive.dst, rng, ok);
  // A single candidate equal to v is returned as is.
  return {ok ? dst : destinations_.front(), false};
}

NegativeDraw NegativeSampler::draw(NegativeStrategy strategy, const Interaction& positive, std::mt19937_64& rng) const {
  std::vector<NodeId> pool;
  switch (strategy) {
    case NegativeStrategy::rnd: return draw_random(positive, rng);
    case NegativeStrategy::hist: {
      auto it = first_seen_.find(positive.src);
      if (it != first_seen_.end()) {
        const auto& firsts = it->second;
        const auto end = std::lower_bound(firsts.begin(), firsts.end(), positive.t,
                                          [](const PairSeen& p, Timestamp t) { return p.first_t < t; });
        std::vector<NodeId> now;
        const auto& ev = events_.at(positive.src);
        auto [lo, hi] = std::equal_range(ev.begin(), ev.end(), Event{positive.t, 0},
                                         [](const Event& a, const Event& b) { return a.t < b.t; });
        for (auto e = lo; e != hi; ++e) now.push_back(e->dst);
        std::sort(now.begin(), now.end());
        for (auto p = firsts.begin(); p != end; ++p) {
          if (!std::binary_search(now.begin(), now.end(), p->dst)) pool.push_back(p->dst);
        }
        std::sort(pool.begin(), pool.end());
      }
      break;
    }
    case NegativeStrategy::ind: {
      auto it = eval_only_.find(positive.src);
      if (it != eval_only_.end()) pool = it->second;
      break;
    }
  }
  bool ok = false;
  const NodeId dst = pool.empty() ? positive.dst : pick_excluding(pool, positive.dst, rng, ok);
  if (!ok) {
    auto d = draw_random(positive, rng);
    d.fallback = true;
    return d;
  }
  return {dst, false};
}

}  // namespace repeatmix
