#include "repeatmix/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct SharedOptions {
  std::string config;
  std::vector<std::string> sets;
  repeatmix::ConfigEntries flags;
};

// Registers a flag that becomes `key = value` on the command line list.
void add_entry_option(CLI::App* app, SharedOptions& shared, const std::string& name, const std::string& key,
                      const std::string& help) {
  app->add_option_function<std::string>(
      name, [&shared, key](const std::string& v) { shared.flags.emplace_back(key, v); }, help);
}

void add_shared(CLI::App* app, SharedOptions& shared) {
  app->add_option("--config", shared.config, "key = value config file");
  add_entry_option(app, shared, "--seed", "seed", "random seed");
  add_entry_option(app, shared, "--out", "out", "output directory");
  add_entry_option(app, shared, "--dataset", "dataset", "interaction CSV");
  add_entry_option(app, shared, "--dataset-name", "dataset_name", "dataset name for built-in defaults");
  add_entry_option(app, shared, "--cache", "cache", "binary graph cache");
  add_entry_option(app, shared, "--node-features", "node_features", "node feature CSV");
  add_entry_option(app, shared, "--model", "model", "repeatmixer | repeatmixer-f");
  add_entry_option(app, shared, "--ablation", "model.ablation", "none | no-te | no-se | sep-e (comma separated)");
  add_entry_option(app, shared, "--fusion", "model.fusion", "adaptive | summation | concatenation");
  add_entry_option(app, shared, "--strategy", "sampler.strategy", "recent | uniform | time-aware | repeat");
  add_entry_option(app, shared, "--neg", "eval.neg", "rnd | hist | ind");
  add_entry_option(app, shared, "--epochs", "train.epochs", "training epochs");
  add_entry_option(app, shared, "--patience", "train.patience", "early stopping patience");
  app->add_flag_callback("--inductive", [&shared] { shared.flags.emplace_back("eval.inductive", "true"); },
                         "evaluate only edges touching unseen nodes");
  app->add_flag_callback("--bipartite", [&shared] { shared.flags.emplace_back("bipartite", "true"); },
                         "treat sources and destinations as separate node sets");
  app->add_option("--set", shared.sets, "extra key=value overrides")->take_all();
}

repeatmix::ConfigEntries command_line_entries(const SharedOptions& shared) {
  auto entries = shared.flags;
  for (const auto& s : shared.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw repeatmix::ConfigError("--set expects key=value, got '" + s + "'");
    entries.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return entries;
}

repeatmix::ConfigEntries file_entries(const SharedOptions& shared) {
  return shared.config.empty() ? repeatmix::ConfigEntries{} : repeatmix::read_config_file(shared.config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repeat-aware temporal link prediction"};
  app.require_subcommand(1);

  SharedOptions ingest_opts, train_opts, eval_opts, bench_opts, pcc_opts;
  auto* ingest = app.add_subcommand("ingest", "parse a CSV and write the graph cache");
  add_shared(ingest, ingest_opts);
  auto* train = app.add_subcommand("train", "train and write checkpoint and metrics");
  add_shared(train, train_opts);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test span");
  add_shared(eval, eval_opts);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* bench = app.add_subcommand("sample-bench", "time the neighbor samplers");
  add_shared(bench, bench_opts);
  std::size_t queries = 10000;
  bench->add_option("--queries", queries, "number of random queries");
  auto* pcc = app.add_subcommand("pcc-analysis", "interval correlation of positive and negative pairs");
  add_shared(pcc, pcc_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto resolve = [](const SharedOptions& o) {
      return repeatmix::resolve_run_config(file_entries(o), command_line_entries(o));
    };
    if (ingest->parsed()) {
      repeatmix::cmd_ingest(resolve(ingest_opts), std::cout);
    } else if (train->parsed()) {
      repeatmix::cmd_train(resolve(train_opts), std::cout);
    } else if (eval->parsed()) {
      auto overrides = file_entries(eval_opts);
      const auto cli = command_line_entries(eval_opts);
      overrides.insert(overrides.end(), cli.begin(), cli.end());
      repeatmix::cmd_eval(checkpoint, overrides, std::cout);
    } else if (bench->parsed()) {
      repeatmix::cmd_sample_bench(resolve(bench_opts), queries, std::cout);
    } else if (pcc->parsed()) {
      repeatmix::cmd_pcc_analysis(resolve(pcc_opts), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
