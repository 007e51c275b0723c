#include "repeatmix/trainer.hpp"

#include "json.hpp"

namespace repeatmix {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return splitmix64(h ^ c);
}

void write_metrics(std::ostream& out, const std::vector<MetricsRecord>& records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["split"] = r.split;
    j["strategy"] = r.strategy;
    j["ap"] = optional_number(r.ap);
    j["auc"] = optional_number(r.auc);
    j["loss"] = optional_number(r.loss);
    j["seconds"] = optional_number(r.seconds);
    out << j.dump() << '\n';
  }
}

std::vector<PairJob> batch_jobs(const TemporalGraph& g, const NegativeSampler& negatives, NegativeStrategy strategy,
                                EdgeIndex begin, EdgeIndex end, std::uint64_t seed,
                                const std::function<bool(const Interaction&)>& keep, std::size_t& fallbacks) {
  std::vector<PairJob> jobs;
  jobs.reserve(static_cast<std::size_t>(2 * (end - begin)));
  std::mt19937_64 rng(seed);
  const auto& edges = g.interactions();
  for (EdgeIndex i = begin; i < end; ++i) {
    const auto& e = edges[static_cast<std::size_t>(i)];
    if (keep && !keep(e)) continue;
    const auto neg = negatives.draw(strategy, e, rng);
    if (neg.fallback) ++fallbacks;
    const Cutoff cutoff{e.t, begin};
    const auto idx = static_cast<std::uint64_t>(i);
    jobs.push_back({e.src, e.dst, e.t, cutoff, 1, derive_seed(seed, idx, 1)});
    jobs.push_back({e.src, neg.dst, e.t, cutoff, 0, derive_seed(seed, idx, 2)});
  }
  return jobs;
}

double pair_interval_pcc(const TemporalGraph& g, Strategy strategy, NodeId u, NodeId v, Cutoff cutoff,
                         const SamplerConfig& cfg) {
  SamplerRng rng(0);
  const auto su = sample_first_order(g, strategy, u, v, cutoff, cfg, rng);
  const auto sv = sample_first_order(g, strategy, v, u, cutoff, cfg, rng);
  const auto du = interval_sequence(su, cutoff.t, cfg.K);
  const auto dv = interval_sequence(sv, cutoff.t, cfg.K);
  return pcc(du, dv);
}

PccReport pcc_preexperiment(const TemporalGraph& g, const SplitView& split, const SamplerConfig& cfg,
                            std::uint64_t seed) {
  cfg.validate();
  const NegativeSampler negatives(g, split);
  std::mt19937_64 rng(derive_seed(seed, 0x9CC));
  PccReport report;
  double sums[2][2] = {{0, 0}, {0, 0}};
  const Strategy strategies[2] = {Strategy::recent, Strategy::repeat_first};
  for (EdgeIndex i = split.test.begin; i < split.test.end; ++i) {
    const auto& e = g.interactions()[static_cast<std::size_t>(i)];
    const NodeId neg = negatives.draw(NegativeStrategy::rnd, e, rng).dst;
    const Cutoff cutoff{e.t};
    for (int s = 0; s < 2; ++s) {
      sums[s][0] += pair_interval_pcc(g, strategies[s], e.src, e.dst, cutoff, cfg);
      sums[s][1] += pair_interval_pcc(g, strategies[s], e.src, neg, cutoff, cfg);
    }
    ++report.pairs;
  }
  if (report.pairs > 0) {
    const auto n = static_cast<double>(report.pairs);
    report.recent = {sums[0][0] / n, sums[0][1] / n};
    report.repeat_aware = {sums[1][0] / n, sums[1][1] / n};
  }
  return report;
}

}  // namespace repeatmix
