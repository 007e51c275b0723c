#include "repeatmix/checkpoint.hpp"
#include "repeatmix/commands.hpp"
#include "repeatmix/ingest.hpp"
#include "repeatmix/run_config.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace repeatmix;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("repeatmix_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

/// Repeat-heavy interaction CSV with two edge feature columns.
void write_dataset(const fs::path& p, std::size_t edges, std::uint64_t seed, bool repeats = true) {
  std::mt19937_64 rng(seed);
  std::ofstream out(p);
  out << "u,i,ts,label,f0,f1\n";
  std::uniform_int_distribution<int> node(0, 14);
  std::normal_distribution<double> f;
  for (std::size_t i = 0; i < edges; ++i) {
    int u, v;
    if (repeats) {
      u = node(rng);
      v = (u * 3 + static_cast<int>(rng() % 3)) % 15;
    } else {
      u = static_cast<int>(i);
      v = static_cast<int>(i + edges);
    }
    out << u << ',' << v << ',' << i << ",0," << f(rng) << ',' << f(rng) << '\n';
  }
}

ConfigEntries small_run(const fs::path& data, const fs::path& out) {
  return {{"dataset", data.string()},   {"out", out.string()},         {"ingest.edge_dim", "2"},
          {"ingest.node_dim", "2"},     {"sampler.k", "4"},            {"sampler.window", "2"},
          {"sampler.repeats", "3"},     {"sampler.second_order_nodes", "2"},
          {"encoder.time_dim", "4"},    {"encoder.segment_dim", "2"},  {"mixer.layers", "1"},
          {"mixer.d_model", "8"},       {"train.epochs", "2"},         {"train.batch_size", "100"},
          {"train.lr", "0.001"},        {"seed", "7"}};
}

}  // namespace

TEST(RunConfig, SerializeRoundTrip) {
  RunConfig cfg;
  apply_entries(cfg, {{"sampler.k", "12"},
                      {"model", "repeatmixer-f"},
                      {"model.ablation", "no-te,sep-e"},
                      {"model.fusion", "concatenation"},
                      {"train.lr", "0.000123"},
                      {"eval.neg", "hist"},
                      {"eval.inductive", "true"},
                      {"dataset", "data/some file.csv"}});
  const auto text = serialize(cfg);
  const auto back = parse_run_config(text);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(back.model.encoder.K, 12);
  EXPECT_FALSE(back.model.model.use_second_order);
  EXPECT_TRUE(back.model.model.ablations.no_time_encoding);
  EXPECT_TRUE(back.model.model.ablations.separate_encoding);
  EXPECT_FALSE(back.model.model.ablations.no_segment_embedding);
  EXPECT_EQ(back.model.model.fusion, Fusion::concatenation);
  EXPECT_EQ(back.train.lr, 0.000123);
  EXPECT_EQ(back.train.eval_strategy, NegativeStrategy::hist);
  EXPECT_TRUE(back.train.inductive);
  EXPECT_EQ(back.dataset, "data/some file.csv");
}

TEST(RunConfig, CommentsAndBlankLines) {
  std::istringstream in("# header\n\nsampler.k = 9  # trailing\n  seed=3\n");
  const auto e = parse_config_text(in);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0], (std::pair<std::string, std::string>{"sampler.k", "9"}));
  EXPECT_EQ(e[1], (std::pair<std::string, std::string>{"seed", "3"}));
  std::istringstream bad("sampler.k 9\n");
  EXPECT_THROW(parse_config_text(bad), ConfigError);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  RunConfig cfg;
  EXPECT_THROW(apply_entries(cfg, {{"sampler.kk", "3"}}), ConfigError);
  EXPECT_THROW(apply_entries(cfg, {{"sampler.k", "three"}}), ConfigError);
  EXPECT_THROW(apply_entries(cfg, {{"model", "tgn"}}), ConfigError);
  EXPECT_THROW(apply_entries(cfg, {{"model.ablation", "no-xx"}}), ConfigError);
  EXPECT_THROW(apply_entries(cfg, {{"eval.neg", "zipf"}}), ConfigError);
  EXPECT_THROW(apply_entries(cfg, {{"bipartite", "maybe"}}), ConfigError);
  EXPECT_THROW(parse_run_config("bogus = 1\n"), ConfigError);
}

TEST(RunConfig, Precedence) {
  // dataset defaults
  auto cfg = resolve_run_config({}, {{"dataset", "/data/ml_wikipedia.csv"}});
  EXPECT_EQ(cfg.dataset_name, "wikipedia");
  EXPECT_EQ(cfg.model.encoder.K, 30);
  EXPECT_TRUE(cfg.bipartite);
  // file beats defaults, command line beats file
  cfg = resolve_run_config({{"dataset", "/data/ml_wikipedia.csv"}, {"sampler.k", "20"}, {"seed", "4"}},
                           {{"sampler.k", "25"}});
  EXPECT_EQ(cfg.model.encoder.K, 25);
  EXPECT_EQ(cfg.seed, 4u);
  // explicit name wins over the file stem
  cfg = resolve_run_config({{"dataset", "x/reddit.csv"}, {"dataset_name", "enron"}}, {});
  EXPECT_EQ(cfg.model.encoder.K, 16);
  EXPECT_FALSE(cfg.bipartite);
  // unknown names keep the built-ins
  cfg = resolve_run_config({{"dataset", "x/other.csv"}}, {});
  EXPECT_EQ(cfg.model.encoder.K, RunConfig{}.model.encoder.K);
}

TEST(RunConfig, DatasetDefaultsTable) {
  const std::vector<std::tuple<std::string, int, bool>> table{{"wikipedia", 30, true}, {"reddit", 10, true},
                                                              {"mooc", 64, true},      {"lastfm", 10, true},
                                                              {"enron", 16, false},    {"uci", 32, false}};
  for (const auto& [name, K, bip] : table) {
    RunConfig cfg;
    apply_dataset_defaults(cfg, name);
    EXPECT_EQ(cfg.model.encoder.K, K) << name;
    EXPECT_EQ(cfg.bipartite, bip) << name;
  }
  EXPECT_EQ(infer_dataset_name("/a/b/ml_uci.csv"), "uci");
  EXPECT_EQ(infer_dataset_name("uci"), "uci");
}

TEST(RunConfig, DerivedValues) {
  auto cfg = resolve_run_config({}, {{"encoder.time_dim", "16"}, {"train.epochs", "3"}, {"train.patience", "20"}});
  EXPECT_DOUBLE_EQ(cfg.model.encoder.time.alpha, 4.0);
  EXPECT_DOUBLE_EQ(cfg.model.encoder.time.beta, 4.0);
  EXPECT_EQ(cfg.train.patience, 3);
  cfg = resolve_run_config({}, {{"encoder.time_dim", "16"}, {"encoder.time_alpha", "2"}});
  EXPECT_DOUBLE_EQ(cfg.model.encoder.time.alpha, 2.0);
  EXPECT_DOUBLE_EQ(cfg.model.encoder.time.beta, 4.0);
}

TEST(RunConfig, StructuralKeys) {
  const auto& keys = structural_keys();
  for (const char* k : {"sampler.k", "mixer.d_model", "mixer.layers", "model", "model.fusion", "model.ablation",
                        "encoder.time_dim", "encoder.segment_dim"}) {
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  }
  for (const char* k : {"train.lr", "eval.neg", "eval.inductive", "seed", "out"}) {
    EXPECT_EQ(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  }
}

TEST(Checkpoint, BitExactRoundTrip) {
  ParamStore<double> store;
  store.add("a", 3, 4, ParamInit::uniform(1.0));
  store.add("b.c", 1, 1, ParamInit::uniform(1.0));
  store.initialize(5);
  store.value(ParamId{1})(0, 0) = 1.0 / 3.0;
  const auto c = make_checkpoint(store, "seed = 1\n", 7, 0.875);
  std::stringstream s1;
  save_checkpoint(c, s1);
  const auto bytes = s1.str();
  EXPECT_EQ(bytes.substr(0, 4), "RMXC");
  std::istringstream in(bytes);
  const auto back = load_checkpoint(in);
  EXPECT_EQ(back.config_text, "seed = 1\n");
  EXPECT_EQ(back.epoch, 7);
  EXPECT_EQ(back.best_val, 0.875);
  std::stringstream s2;
  save_checkpoint(back, s2);
  EXPECT_EQ(s2.str(), bytes);

  ParamStore<double> other;
  other.add("a", 3, 4, ParamInit::zeros());
  other.add("b.c", 1, 1, ParamInit::zeros());
  other.initialize(0);
  restore(back, other);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(other.entry(i).value, store.entry(i).value);

  ParamStore<double> wrong;
  wrong.add("a", 4, 3, ParamInit::zeros());
  wrong.add("b.c", 1, 1, ParamInit::zeros());
  EXPECT_THROW(restore(back, wrong), std::invalid_argument);
  ParamStore<double> fewer;
  fewer.add("a", 3, 4, ParamInit::zeros());
  EXPECT_THROW(restore(back, fewer), std::invalid_argument);
}

TEST(Checkpoint, VersionAndMagicChecked) {
  ParamStore<double> store;
  store.add("a", 1, 1, ParamInit::zeros());
  std::stringstream s;
  save_checkpoint(make_checkpoint(store, "", 0, 0.0), s);
  std::string bytes = s.str();
  std::string bumped = bytes;
  bumped[4] = static_cast<char>(kCheckpointVersion + 1);
  std::istringstream a(bumped);
  EXPECT_THROW(load_checkpoint(a), binary::FormatError);
  std::string magic = bytes;
  magic[0] = 'X';
  std::istringstream b(magic);
  EXPECT_THROW(load_checkpoint(b), binary::FormatError);
  std::istringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_checkpoint(cut), binary::FormatError);
}

TEST(Commands, IngestIsIdempotent) {
  TempDir dir;
  std::ofstream(dir.path() / "toy.csv") << "u,i,ts,label\n0,1,1.0,0\n0,1,2.0,0\n0,2,3.0,0\n";
  auto cfg = resolve_run_config({}, {{"dataset", (dir.path() / "toy.csv").string()}, {"out", dir.path().string()},
                                     {"ingest.edge_dim", "0"}, {"ingest.node_dim", "0"}});
  std::ostringstream log1, log2;
  const auto r1 = cmd_ingest(cfg, log1);
  const auto first = read_bytes(r1.cache);
  const auto r2 = cmd_ingest(cfg, log2);
  EXPECT_EQ(read_bytes(r2.cache), first);
  EXPECT_EQ(r1.edges, 3u);
  EXPECT_EQ(r1.nodes, 3u);
  EXPECT_NEAR(r1.repeat_ratio, 1.0 / 3.0, 1e-15);
  EXPECT_NE(log1.str().find("repeat_ratio 0.333"), std::string::npos) << log1.str();
  EXPECT_EQ(log1.str(), log2.str());
}

TEST(Commands, IngestErrors) {
  TempDir dir;
  std::ofstream(dir.path() / "empty.csv").close();
  std::ostringstream log;
  auto cfg = resolve_run_config({}, {{"dataset", (dir.path() / "empty.csv").string()}, {"out", dir.path().string()}});
  EXPECT_ANY_THROW(cmd_ingest(cfg, log));
  std::ofstream(dir.path() / "bad.csv") << "u,i,ts,label\n0,1,1.0,0\n0,x,2.0,0\n";
  cfg.dataset = (dir.path() / "bad.csv").string();
  try {
    cmd_ingest(cfg, log);
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  cfg.dataset = (dir.path() / "missing.csv").string();
  EXPECT_THROW(cmd_ingest(cfg, log), std::invalid_argument);
}

TEST(Commands, TrainIsDeterministicUnderSeed) {
  TempDir dir;
  const auto data = dir.path() / "syn.csv";
  write_dataset(data, 600, 1);
  std::ostringstream log;
  const auto a = cmd_train(resolve_run_config({}, small_run(data, dir.path() / "a")), log);
  const auto b = cmd_train(resolve_run_config({}, small_run(data, dir.path() / "b")), log);
  EXPECT_EQ(read_bytes(a.metrics), read_bytes(b.metrics));
  // checkpoints differ only in the embedded output directory
  const auto ca = load_checkpoint(a.checkpoint), cb = load_checkpoint(b.checkpoint);
  ASSERT_EQ(ca.tensors.size(), cb.tensors.size());
  for (std::size_t i = 0; i < ca.tensors.size(); ++i) EXPECT_EQ(ca.tensors[i].value, cb.tensors[i].value);
  // train, val per epoch and one test record
  std::istringstream lines(read_bytes(a.metrics));
  std::vector<nlohmann::json> recs;
  for (std::string line; std::getline(lines, line);) recs.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(recs.size(), 5u);
  EXPECT_EQ(recs.back()["split"], "test");
  EXPECT_EQ(recs.back()["strategy"], "rnd");
  EXPECT_TRUE(recs.back()["seconds"].is_null());

  auto other = small_run(data, dir.path() / "c");
  other.back().second = "8";
  const auto c = cmd_train(resolve_run_config({}, other), log);
  EXPECT_NE(read_bytes(c.metrics), read_bytes(a.metrics));
}

TEST(Commands, FirstOrderFlagDropsSecondOrderTensors) {
  TempDir dir;
  const auto data = dir.path() / "syn.csv";
  write_dataset(data, 300, 2);
  auto entries = small_run(data, dir.path());
  entries.emplace_back("model", "repeatmixer-f");
  entries.emplace_back("train.epochs", "1");
  std::ostringstream log;
  const auto r = cmd_train(resolve_run_config({}, entries), log);
  const auto ckpt = load_checkpoint(r.checkpoint);
  bool any_second = false;
  for (const auto& t : ckpt.tensors) any_second = any_second || t.name.rfind("second.", 0) == 0;
  EXPECT_FALSE(any_second);
  EXPECT_FALSE(parse_run_config(ckpt.config_text).model.model.use_second_order);
}

TEST(Commands, NoTimeEncodingFlagZeroesBlock) {
  RunConfig cfg;
  apply_entries(cfg, {{"model.ablation", "no-te"}, {"encoder.time_dim", "4"}, {"encoder.segment_dim", "2"},
                      {"sampler.k", "3"}, {"mixer.d_model", "8"}});
  cfg.model.encoder.d_node = 1;
  cfg.model.encoder.d_edge = 1;
  ParamStore<double> store;
  const RepeatMixer<double> model(cfg.model, store);
  store.initialize(1);
  const auto g = fixtures::make_graph({{0, 1, 1.0}, {0, 2, 2.0}}, 3, 1, 1);
  const auto e = model.encode(store, g, sample_recent(g, 0, 5.0, 3), 5.0, Segment::A);
  EXPECT_TRUE(e.matrix.block(0, 2, 2, 4).isZero(0.0));
  EXPECT_FALSE(e.matrix.block(0, 6, 2, 2).isZero(0.0));
}

TEST(Commands, EvalReproducesAndChecksConfig) {
  TempDir dir;
  const auto data = dir.path() / "syn.csv";
  write_dataset(data, 400, 3);
  std::ostringstream log;
  const auto trained = cmd_train(resolve_run_config({}, small_run(data, dir.path())), log);

  std::ostringstream l1, l2;
  const auto e1 = cmd_eval(trained.checkpoint, {{"eval.neg", "hist"}}, l1);
  const auto first = read_bytes(e1.metrics);
  const auto e2 = cmd_eval(trained.checkpoint, {{"eval.neg", "hist"}}, l2);
  EXPECT_EQ(read_bytes(e2.metrics), first);
  EXPECT_EQ(l1.str(), l2.str());
  EXPECT_NE(first.find("\"strategy\":\"hist\""), std::string::npos);

  // the rnd evaluation reproduces the test record written by train
  std::ostringstream l3;
  const auto e3 = cmd_eval(trained.checkpoint, {}, l3);
  EXPECT_EQ(e3.report.ap, trained.test.ap);

  EXPECT_THROW(cmd_eval(dir.path() / "nope.rmxc", {}, log), std::invalid_argument);
  try {
    cmd_eval(trained.checkpoint, {{"sampler.k", "5"}}, log);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sampler.k"), std::string::npos);
  }
  EXPECT_THROW(cmd_eval(trained.checkpoint, {{"model", "repeatmixer-f"}}, log), ConfigError);
}

TEST(Commands, HistoricalNegativesWithoutRepeatsFallBack) {
  TempDir dir;
  const auto data = dir.path() / "norep.csv";
  write_dataset(data, 200, 4, false);
  auto entries = small_run(data, dir.path());
  entries.emplace_back("train.epochs", "1");
  std::ostringstream log;
  const auto trained = cmd_train(resolve_run_config({}, entries), log);
  std::ostringstream out;
  const auto r = cmd_eval(trained.checkpoint, {{"eval.neg", "hist"}}, out);
  EXPECT_EQ(r.report.negative_fallbacks, r.report.positives);
  const std::string expect =
      "negative fallbacks to rnd: " + std::to_string(r.report.positives) + " of " + std::to_string(r.report.positives);
  EXPECT_NE(out.str().find(expect), std::string::npos) << out.str();
}

namespace {

// u meets a fresh m before every meeting with v; v meets one of three j
// nodes before every meeting with u; every m has L interactions with the
// j nodes. First-order work grows with L, second-order work with L^2.
TemporalGraph chain_workload(int L) {
  std::vector<fixtures::Edge> e;
  double t = 0;
  const NodeId j0 = 2;
  const NodeId m0 = 5;
  for (int k = 0; k < L; ++k) {
    for (int i = 0; i < L; ++i) e.push_back({m0 + i, j0 + k % 3, t++});
  }
  for (int r = 0; r < L; ++r) {
    e.push_back({1, j0 + r % 3, t++});
    e.push_back({0, m0 + r, t++});
    e.push_back({0, 1, t++});
  }
  return fixtures::make_graph(e, m0 + L);
}

double mean_time(const TemporalGraph& g, Strategy s, const SamplerConfig& cfg) {
  const Timestamp end = g.interactions().back().t + 1;
  const std::vector<BenchQuery> qs(300, BenchQuery{0, 1, end});
  double best = 1e300;
  for (int rep = 0; rep < 3; ++rep) best = std::min(best, time_strategy(g, s, qs, cfg, 1).mean_us);
  return best;
}

}  // namespace

TEST(SampleBench, SecondOrderGrowsFasterThanFirstOrder) {
  const auto small = chain_workload(32), large = chain_workload(64);
  SamplerConfig cfg;
  cfg.W = 2;
  cfg.M = 3;
  cfg.R = 64;
  cfg.K = 128;
  // the workload really does produce L^2 second-order candidates
  const Timestamp end = large.interactions().back().t + 1;
  EXPECT_EQ(sample_repeat_first(large, 0, 1, Cutoff{end}, cfg).entries.size(), 64u);
  const double first_ratio = mean_time(large, Strategy::repeat_first, cfg) / mean_time(small, Strategy::repeat_first, cfg);
  const double second_ratio =
      mean_time(large, Strategy::repeat_second, cfg) / mean_time(small, Strategy::repeat_second, cfg);
  EXPECT_GT(second_ratio, 3.0) << "first " << first_ratio << " second " << second_ratio;
  EXPECT_GT(second_ratio, first_ratio) << "first " << first_ratio << " second " << second_ratio;
}

TEST(SampleBench, ReportAndDeterministicQueries) {
  TempDir dir;
  const auto data = dir.path() / "syn.csv";
  write_dataset(data, 300, 5);
  auto cfg = resolve_run_config({}, small_run(data, dir.path()));
  std::ostringstream log;
  const auto r = cmd_sample_bench(cfg, 200, log);
  ASSERT_EQ(r.timings.size(), 5u);
  EXPECT_EQ(r.timings[0].strategy, "recent");
  EXPECT_GT(r.timings[0].p99_us, 0.0);
  for (const auto& t : r.timings) {
    EXPECT_EQ(t.queries, 200u);
    EXPECT_GE(t.p99_us, 0.0);
    EXPECT_GT(t.queries_per_second, 0.0);
  }
  std::istringstream lines(log.str());
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("mean_us") && j.contains("p99_us") && j.contains("queries_per_second"));
  }
  EXPECT_EQ(n, 5);
  const auto g = load_graph(cfg);
  const auto q1 = bench_queries(g, 50, 9), q2 = bench_queries(g, 50, 9), q3 = bench_queries(g, 50, 10);
  ASSERT_EQ(q1.size(), 50u);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < q1.size(); ++i) {
    same = same && q1[i].u == q2[i].u && q1[i].v == q2[i].v && q1[i].t == q2[i].t;
    differs = differs || q1[i].t != q3[i].t;
  }
  EXPECT_TRUE(same);
  EXPECT_TRUE(differs);
}

TEST(PccAnalysis, Schema) {
  TempDir dir;
  const auto data = dir.path() / "syn.csv";
  write_dataset(data, 300, 6);
  auto cfg = resolve_run_config({}, small_run(data, dir.path()));
  std::ostringstream log;
  const auto r = cmd_pcc_analysis(cfg, log);
  const auto j = nlohmann::json::parse(log.str());
  EXPECT_EQ(j.size(), 3u);
  EXPECT_EQ(j["pairs"], r.pairs);
  for (const char* s : {"recent", "repeat"}) {
    ASSERT_TRUE(j.contains(s));
    EXPECT_EQ(j[s].size(), 3u);
    const double pos = j[s]["positive"], neg = j[s]["negative"], disc = j[s]["discrepancy"];
    EXPECT_DOUBLE_EQ(disc, pos - neg);
  }
  EXPECT_EQ(nlohmann::json::parse(read_bytes(dir.path() / "pcc_analysis.json")), j);
}
