#pragma once

#include "repeatmix/metrics.hpp"
#include "repeatmix/model.hpp"
#include "repeatmix/negative_sampling.hpp"
#include "repeatmix/parallel.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace repeatmix {

struct TrainConfig {
  int epochs = 100;
  int patience = 20;
  int batch_size = 200;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  NegativeStrategy eval_strategy = NegativeStrategy::rnd;
  bool inductive = false;
  int threads = 1;
  bool record_wall_clock = false;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (patience > epochs) throw std::invalid_argument("patience must not exceed epochs");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  }
};

/// One line of the metrics stream.
struct MetricsRecord {
  int epoch = 0;
  std::string split;
  std::string strategy;
  std::optional<double> ap;
  std::optional<double> auc;
  std::optional<double> loss;
  std::optional<double> seconds;
};

struct MetricsReport {
  double ap = 0.0;
  double auc = 0.0;
  double loss = 0.0;
  std::vector<double> loss_history;  ///< mean training loss per epoch
  std::vector<MetricsRecord> records;
  double seconds = 0.0;
  std::size_t positives = 0;
  std::size_t negative_fallbacks = 0;
  int best_epoch = 0;
  double best_val_ap = 0.0;
};

/// Line-delimited JSON, one object per record, keys in a fixed order.
void write_metrics(std::ostream& out, const std::vector<MetricsRecord>& records);

/// Stateless seed derivation (splitmix64 over the inputs).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Number of fixed gradient partitions per batch. Results do not depend on
/// the worker count because partitions are summed in index order.
inline constexpr std::size_t kGradientChunks = 8;

struct PairJob {
  NodeId u = 0;
  NodeId v = 0;
  Timestamp t = 0.0;
  Cutoff cutoff;
  int label = 0;
  std::uint64_t seed = 0;
};

/// Builds (positive, negative) jobs for interactions [begin, end). History
/// visibility stops at `begin` so no pair sees its own batch.
std::vector<PairJob> batch_jobs(const TemporalGraph& g, const NegativeSampler& negatives, NegativeStrategy strategy,
                                EdgeIndex begin, EdgeIndex end, std::uint64_t seed,
                                const std::function<bool(const Interaction&)>& keep, std::size_t& fallbacks);

struct ScoredPairs {
  std::vector<double> scores;
  std::vector<int> labels;
  double loss_sum = 0.0;
};

/// Forward (and, when `grads` is given, backward of the mean BCE over
/// `normaliser` pairs) for a list of jobs.
template <typename Scalar>
ScoredPairs run_jobs(const TemporalGraph& g, const RepeatMixer<Scalar>& model, const ParamStore<Scalar>& store,
                     const std::vector<PairJob>& jobs, int threads, std::vector<Gradients<Scalar>>* chunk_grads,
                     double normaliser, SampleCounters* counters = nullptr) {
  const std::size_t n = jobs.size();
  ScoredPairs out;
  out.scores.assign(n, 0.0);
  out.labels.assign(n, 0);
  std::vector<double> chunk_loss(kGradientChunks, 0.0);
  parallel_for(kGradientChunks, threads, [&](std::size_t c) {
    const std::size_t lo = c * n / kGradientChunks, hi = (c + 1) * n / kGradientChunks;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& job = jobs[i];
      SamplerRng rng(job.seed);
      const auto samples = model.gather_samples(g, job.u, job.v, job.cutoff, rng, counters);
      auto res = model.forward(store, g, job.t, samples);
      const double logit = static_cast<double>(res.logit);
      const double loss = job.label == 1 ? softplus(-logit) : softplus(logit);
      if (!std::isfinite(loss)) throw NumericError("non-finite loss");
      chunk_loss[c] += loss;
      out.scores[i] = sigmoid(logit);
      out.labels[i] = job.label;
      if (chunk_grads) {
        const double d_logit = (sigmoid(logit) - static_cast<double>(job.label)) / normaliser;
        model.backward(store, res.tape, static_cast<Scalar>(d_logit), (*chunk_grads)[c]);
      }
    }
  });
  for (double l : chunk_loss) out.loss_sum += l;
  return out;
}

struct EvalOptions {
  NegativeStrategy strategy = NegativeStrategy::rnd;
  bool inductive = false;
  std::uint64_t seed = 0;
  int batch_size = 200;
  int threads = 1;
};

/// Scores positives of `range` (only those touching new nodes when
/// inductive) against strategy-matched negatives.
template <typename Scalar>
MetricsReport evaluate_range(const TemporalGraph& g, const SplitView& split, const NegativeSampler& negatives,
                             const RepeatMixer<Scalar>& model, const ParamStore<Scalar>& store, IndexRange range,
                             const EvalOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  std::function<bool(const Interaction&)> keep;
  if (opt.inductive) {
    if (split.new_nodes.empty()) throw std::invalid_argument("inductive evaluation needs nodes unseen in training");
    keep = [&split](const Interaction& e) { return split.is_new_node(e.src) || split.is_new_node(e.dst); };
  }
  MetricsReport report;
  std::vector<double> scores;
  std::vector<int> labels;
  double loss_sum = 0.0;
  for (EdgeIndex b = range.begin; b < range.end; b += opt.batch_size) {
    const EdgeIndex e = std::min<EdgeIndex>(range.end, b + opt.batch_size);
    const auto jobs = batch_jobs(g, negatives, opt.strategy, b, e, derive_seed(opt.seed, 0xE7A1, static_cast<std::uint64_t>(b)),
                                 keep, report.negative_fallbacks);
    if (jobs.empty()) continue;
    const auto scored = run_jobs<Scalar>(g, model, store, jobs, opt.threads, nullptr, 1.0);
    scores.insert(scores.end(), scored.scores.begin(), scored.scores.end());
    labels.insert(labels.end(), scored.labels.begin(), scored.labels.end());
    loss_sum += scored.loss_sum;
  }
  if (scores.empty()) {
    throw std::invalid_argument(opt.inductive ? "inductive evaluation set is empty" : "evaluation set is empty");
  }
  report.positives = scores.size() / 2;
  report.ap = average_precision(scores, labels);
  report.auc = auc_roc(scores, labels);
  report.loss = loss_sum / static_cast<double>(scores.size());
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

/// Chronological mini-batch training with one random negative per positive,
/// mean BCE, Adam and early stopping on validation AP (random negatives).
/// On return `store` holds the best-validation parameters.
template <typename Scalar>
MetricsReport train(const TemporalGraph& g, const SplitView& split, const RepeatMixer<Scalar>& model,
                    ParamStore<Scalar>& store, const TrainConfig& cfg, SampleCounters* counters = nullptr,
                    std::ostream* progress = nullptr) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const NegativeSampler negatives(g, split);
  const AdamConfig adam{cfg.lr};
  std::vector<Gradients<Scalar>> chunk_grads;
  for (std::size_t c = 0; c < kGradientChunks; ++c) chunk_grads.push_back(store.make_gradients());

  MetricsReport report;
  std::vector<Matrix<Scalar>> best;
  double best_ap = -1.0;
  int since_best = 0;
  std::int64_t step = 0;
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_pairs = 0;
    std::vector<double> train_scores;
    std::vector<int> train_labels;
    std::size_t fallbacks = 0;
    for (EdgeIndex b = split.train.begin; b < split.train.end; b += cfg.batch_size) {
      const EdgeIndex e = std::min<EdgeIndex>(split.train.end, b + cfg.batch_size);
      const auto jobs = batch_jobs(g, negatives, NegativeStrategy::rnd, b, e,
                                   derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(b)),
                                   nullptr, fallbacks);
      for (auto& cg : chunk_grads) cg.set_zero();
      const auto scored = run_jobs<Scalar>(g, model, store, jobs, cfg.threads, &chunk_grads,
                                           static_cast<double>(jobs.size()), counters);
      if (!std::isfinite(scored.loss_sum)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(b));
      }
      auto& grads = store.gradients();
      grads.set_zero();
      for (const auto& cg : chunk_grads) grads += cg;
      adam_step(store, adam, ++step);
      epoch_loss += scored.loss_sum;
      epoch_pairs += jobs.size();
      train_scores.insert(train_scores.end(), scored.scores.begin(), scored.scores.end());
      train_labels.insert(train_labels.end(), scored.labels.begin(), scored.labels.end());
    }
    const double mean_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(epoch_pairs, 1));
    report.loss_history.push_back(mean_loss);
    MetricsRecord train_rec{epoch, "train", "rnd", std::nullopt, std::nullopt, mean_loss, std::nullopt};
    if (train_scores.size() >= 2) {
      train_rec.ap = average_precision(train_scores, train_labels);
      train_rec.auc = auc_roc(train_scores, train_labels);
    }
    if (cfg.record_wall_clock) train_rec.seconds = elapsed();
    report.records.push_back(train_rec);

    const auto val = evaluate_range(g, split, negatives, model, store, split.val,
                                    {NegativeStrategy::rnd, false, derive_seed(cfg.seed, 0x5A11), cfg.batch_size, cfg.threads});
    MetricsRecord val_rec{epoch, "val", "rnd", val.ap, val.auc, val.loss, std::nullopt};
    if (cfg.record_wall_clock) val_rec.seconds = elapsed();
    report.records.push_back(val_rec);
    if (progress) {
      *progress << "epoch " << epoch << " loss " << mean_loss << " val_ap " << val.ap << " val_auc " << val.auc << '\n';
    }

    if (val.ap > best_ap) {
      best_ap = val.ap;
      report.best_epoch = epoch;
      since_best = 0;
      best.clear();
      for (std::size_t i = 0; i < store.size(); ++i) best.push_back(store.entry(i).value);
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < best.size(); ++i) store.entry(i).value = best[i];
  report.best_val_ap = best_ap;
  report.ap = best_ap;
  report.loss = report.loss_history.empty() ? 0.0 : report.loss_history.back();
  report.seconds = elapsed();
  return report;
}

/// Mean PCC of the endpoint interval sequences for test positives and one
/// random negative each, under two sampling strategies.
struct PccClassMeans {
  double positive = 0.0;
  double negative = 0.0;
  [[nodiscard]] double discrepancy() const { return positive - negative; }
};

struct PccReport {
  PccClassMeans recent;
  PccClassMeans repeat_aware;
  std::size_t pairs = 0;
};

PccReport pcc_preexperiment(const TemporalGraph& g, const SplitView& split, const SamplerConfig& cfg,
                            std::uint64_t seed);

/// PCC between the interval sequences of (u, v) and (v, u) at time t under
/// one first-order strategy.
double pair_interval_pcc(const TemporalGraph& g, Strategy strategy, NodeId u, NodeId v, Cutoff cutoff,
                         const SamplerConfig& cfg);

}  // namespace repeatmix
