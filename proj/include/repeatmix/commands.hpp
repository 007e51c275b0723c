#pragma once

#include "repeatmix/run_config.hpp"
#include "repeatmix/trainer.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace repeatmix {

/// Loads the cached graph when `cfg.cache` exists, otherwise ingests
/// `cfg.dataset`.
TemporalGraph load_graph(const RunConfig& cfg);

struct IngestResult {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  double repeat_ratio = 0.0;
  std::filesystem::path cache;
};
IngestResult cmd_ingest(const RunConfig& cfg, std::ostream& log);

struct TrainResult {
  MetricsReport train;
  MetricsReport test;
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
};
TrainResult cmd_train(const RunConfig& cfg, std::ostream& log);

struct EvalResult {
  MetricsReport report;
  std::filesystem::path metrics;
};
/// Rebuilds the model from the checkpoint's embedded configuration with
/// `overrides` applied on top. Overrides touching the parameter layout are
/// rejected.
EvalResult cmd_eval(const std::filesystem::path& checkpoint, const ConfigEntries& overrides, std::ostream& log);

struct BenchQuery {
  NodeId u = 0;
  NodeId v = 0;
  Timestamp t = 0.0;
};

struct StrategyTiming {
  std::string strategy;
  std::size_t queries = 0;
  double mean_us = 0.0;
  double p99_us = 0.0;
  double queries_per_second = 0.0;
};

struct BenchResult {
  std::vector<BenchQuery> queries;
  std::vector<StrategyTiming> timings;
};

/// Query edges drawn uniformly from the interaction list.
std::vector<BenchQuery> bench_queries(const TemporalGraph& g, std::size_t count, std::uint64_t seed);
StrategyTiming time_strategy(const TemporalGraph& g, Strategy strategy, const std::vector<BenchQuery>& queries,
                             const SamplerConfig& cfg, std::uint64_t seed);
BenchResult cmd_sample_bench(const RunConfig& cfg, std::size_t queries, std::ostream& log);

PccReport cmd_pcc_analysis(const RunConfig& cfg, std::ostream& log);

}  // namespace repeatmix
