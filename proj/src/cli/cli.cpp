#include "dmsn/cli/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "dmsn/data/dataset_io.hpp"
#include "dmsn/data/synthetic.hpp"
#include "dmsn/error.hpp"
#include "dmsn/eval/attention_dump.hpp"
#include "dmsn/eval/fusing.hpp"
#include "dmsn/eval/report.hpp"
#include "dmsn/model/checkpoint.hpp"
#include "dmsn/model/gradient_suite.hpp"
#include "dmsn/train/trainer.hpp"

namespace dmsn::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kGradTolerance = 1e-4;

struct Flags {
  std::string config, data, valid, test, checkpoint, out;
  std::optional<long long> seed;
  std::string variant, strategy;
  std::map<std::string, std::string> overrides;  // --<config key> VALUE
};

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string("missing required flag ") + flag);
  if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + ": no such file '" + path + "'");
}

void require_value(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required flag ") + flag);
}

void add_common(CLI::App* sub, Flags& f, std::initializer_list<const char*> which) {
  for (std::string_view w : which) {
    if (w == "config") sub->add_option("--config", f.config, "Key=value configuration file");
    if (w == "data") sub->add_option("--data", f.data, "Training dataset (JSON lines)");
    if (w == "valid") sub->add_option("--valid", f.valid, "Validation dataset (JSON lines)");
    if (w == "test") sub->add_option("--test", f.test, "Test dataset (JSON lines)");
    if (w == "checkpoint") sub->add_option("--checkpoint", f.checkpoint, "Model checkpoint file");
    if (w == "out") sub->add_option("--out", f.out, "Output path");
    if (w == "seed") sub->add_option("--seed", f.seed, "Random seed");
    if (w == "variant") sub->add_option("--variant", f.variant, "mlp, atrnn, atmc or mc");
    if (w == "strategy") sub->add_option("--strategy", f.strategy, "Fusion strategy: 1 or 2");
  }
}

// Every train-config key not already covered above is also accepted as a flag.
void add_config_key_flags(CLI::App* sub, Flags& f) {
  for (auto key : train_config_keys()) {
    if (key == "seed" || key == "variant" || key == "strategy") continue;
    const std::string name(key);
    sub->add_option_function<std::string>(
        "--" + name, [&f, name](const std::string& v) { f.overrides[name] = v; }, "Overrides config key " + name);
  }
}

// Precedence: flag > file > default.
TrainConfig resolve_train_config(const Flags& f, bool config_required) {
  KeyValueConfig kv;
  if (!f.config.empty() || config_required) {
    require_file(f.config, "--config");
    kv = KeyValueConfig::load(f.config);
  }
  for (const auto& [k, v] : f.overrides) kv.set(k, v);
  if (f.seed) kv.set("seed", std::to_string(*f.seed));
  if (!f.variant.empty()) kv.set("variant", f.variant);
  if (!f.strategy.empty()) kv.set("strategy", f.strategy);
  try {
    return TrainConfig::from_key_values(kv);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::ostream& open_out(const std::string& path, std::ofstream& file, std::ostream& fallback) {
  if (path.empty()) return fallback;
  file.open(path, std::ios::binary);
  if (!file) throw UsageError("--out: cannot write '" + path + "'");
  return file;
}

int cmd_generate(const Flags& f, std::ostream& out, std::ostream& err) {
  require_file(f.config, "--config");
  require_value(f.out, "--out");
  SyntheticConfig cfg;
  try {
    cfg = SyntheticConfig::from_key_values(KeyValueConfig::load(f.config));
    if (f.seed) cfg.seed = static_cast<std::uint64_t>(*f.seed);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const SyntheticCorpus corpus = generate_synthetic(cfg);
  write_corpus(f.out, corpus);
  out << "wrote " << corpus.train.size() << " train, " << corpus.valid.size() << " valid, " << corpus.test.size()
      << " test records and " << corpus.truth.size() << " intents to " << f.out << "\n";
  (void)err;
  return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = resolve_train_config(f, true);
  require_file(f.data, "--data");
  require_file(f.valid, "--valid");
  require_value(f.checkpoint, "--checkpoint");
  const Vocabulary vocab{cfg.variant.n_cities};
  const auto train_records = load_dataset(f.data, vocab);
  const auto valid_records = load_dataset(f.valid, vocab);
  const TrainResult result = train(train_records, valid_records, cfg, &err);
  write_checkpoint(fs::path(f.checkpoint), result.params);
  std::ofstream file;
  std::ostream& hist = open_out(f.out, file, out);
  write_history(hist, result.history);
  double seconds = 0.0;
  for (const auto& e : result.history.epochs) seconds += e.seconds;
  err << "trained " << result.history.epochs.size() << " epochs in " << seconds << " s; checkpoint "
      << f.checkpoint << "\n";
  return kExitOk;
}

int cmd_evaluate(const Flags& f, std::ostream& out, std::ostream& err) {
  require_file(f.checkpoint, "--checkpoint");
  require_file(f.test, "--test");
  const ModelParams params = read_checkpoint(fs::path(f.checkpoint));
  const auto records = load_dataset(f.test, Vocabulary{params.spec.n_cities});
  const EvalReport report =
      evaluate(params, records, std::string(to_string(params.spec.kind)), fs::path(f.test).filename().string());
  out << format_report(report, true) << "\n";
  if (!f.out.empty()) {
    std::ofstream file(f.out, std::ios::binary);
    if (!file) throw UsageError("--out: cannot write '" + f.out + "'");
    file << format_report(report) << "\n";
  }
  (void)err;
  return kExitOk;
}

int cmd_dump_attention(const Flags& f, std::ostream& out, std::ostream&) {
  require_file(f.checkpoint, "--checkpoint");
  require_file(f.test, "--test");
  const ModelParams params = read_checkpoint(fs::path(f.checkpoint));
  if (!params.spec.has_attention()) {
    throw UsageError("dump-attention: variant '" + std::string(to_string(params.spec.kind)) +
                     "' has no attention layer");
  }
  const auto records = load_dataset(f.test, Vocabulary{params.spec.n_cities});
  std::ofstream file;
  dump_attention(params, records, open_out(f.out, file, out));
  return kExitOk;
}

int cmd_compare_fusing(const Flags& f, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = resolve_train_config(f, false);
  require_file(f.data, "--data");
  require_file(f.valid, "--valid");
  require_file(f.test, "--test");
  const Vocabulary vocab{cfg.variant.n_cities};
  const auto rows = compare_fusing(load_dataset(f.data, vocab), load_dataset(f.valid, vocab),
                                   load_dataset(f.test, vocab), cfg, &err);
  std::ofstream file;
  write_fusing_table(open_out(f.out, file, out), rows);
  return kExitOk;
}

int cmd_grid_search(const Flags& f, std::ostream& out, std::ostream& err) {
  require_file(f.config, "--config");
  require_file(f.data, "--data");
  require_file(f.valid, "--valid");
  std::vector<TrainConfig> grid;
  try {
    for (auto kv : expand_grid(KeyValueConfig::load(f.config))) {
      for (const auto& [k, v] : f.overrides) kv.set(k, v);
      if (!f.variant.empty()) kv.set("variant", f.variant);
      if (!f.strategy.empty()) kv.set("strategy", f.strategy);
      grid.push_back(TrainConfig::from_key_values(kv));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::uint64_t master = f.seed ? static_cast<std::uint64_t>(*f.seed) : grid.front().seed;
  const Vocabulary vocab{grid.front().variant.n_cities};
  const GridResult result =
      grid_search(load_dataset(f.data, vocab), load_dataset(f.valid, vocab), grid, master, &err);
  std::ofstream file;
  std::ostream& os = open_out(f.out, file, out);
  os << "index\tvalid_auc\tbest_epoch\tconfig\n";
  char buf[64];
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    std::string text = result.rows[i].config.to_key_values().to_text();
    std::replace(text.begin(), text.end(), '\n', ';');
    std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%d\t", i, result.rows[i].valid_auc, result.rows[i].best_epoch);
    os << buf << text << "\n";
  }
  os << "best\t" << result.best_index << "\n";
  return kExitOk;
}

int cmd_grad_check(const Flags& f, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = f.seed ? static_cast<std::uint64_t>(*f.seed) : 7;
  bool ok = true;
  char buf[160];
  for (auto kind : {VariantKind::mlp, VariantKind::atrnn, VariantKind::atmc, VariantKind::mc}) {
    for (auto strategy : {FusionStrategy::global, FusionStrategy::per_stream}) {
      const VariantSpec spec = gradient_check_spec(kind, strategy);
      const SampleRecord record = gradient_check_record(spec.max_len, spec.n_cities, seed);
      double worst = 0.0;
      std::string worst_name;
      for (const auto& row : check_gradients(spec, record, seed)) {
        if (row.max_rel_error >= worst) {
          worst = row.max_rel_error;
          worst_name = row.tensor;
        }
      }
      const bool pass = worst < kGradTolerance;
      ok = ok && pass;
      std::snprintf(buf, sizeof(buf), "%-9s strategy %d  max_rel_error %.3e  (%s)  %s\n",
                    std::string(to_string(kind)).c_str(), static_cast<int>(strategy), worst, worst_name.c_str(),
                    pass ? "PASS" : "FAIL");
      out << buf;
    }
  }
  if (!ok) {
    err << "gradient check above tolerance " << kGradTolerance << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-sequence fused travel-intent models: generate, train, evaluate, inspect", "dmsn"};
  app.require_subcommand(1);
  Flags f;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset and its intent table");
  add_common(generate, f, {"config", "seed", "out"});
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common(train_cmd, f, {"config", "data", "valid", "checkpoint", "out", "seed", "variant", "strategy"});
  add_config_key_flags(train_cmd, f);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Report test AUC of a checkpoint");
  add_common(evaluate_cmd, f, {"checkpoint", "test", "out"});
  auto* dump = app.add_subcommand("dump-attention", "Write per-event attention weights as CSV");
  add_common(dump, f, {"checkpoint", "test", "out"});
  auto* fusing = app.add_subcommand("compare-fusing", "Single-stream vs fusion strategy I/II table");
  add_common(fusing, f, {"config", "data", "valid", "test", "out", "seed", "variant"});
  add_config_key_flags(fusing, f);
  auto* grid = app.add_subcommand("grid-search", "Train every config of a key=a|b grid");
  add_common(grid, f, {"config", "data", "valid", "out", "seed", "variant", "strategy"});
  add_config_key_flags(grid, f);
  auto* gradcheck = app.add_subcommand("grad-check", "Finite-difference check of every variant");
  add_common(gradcheck, f, {"seed"});

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(f, out, err);
    if (train_cmd->parsed()) return cmd_train(f, out, err);
    if (evaluate_cmd->parsed()) return cmd_evaluate(f, out, err);
    if (dump->parsed()) return cmd_dump_attention(f, out, err);
    if (fusing->parsed()) return cmd_compare_fusing(f, out, err);
    if (grid->parsed()) return cmd_grid_search(f, out, err);
    if (gradcheck->parsed()) return cmd_grad_check(f, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "invalid data: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "invalid data: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace dmsn::cli
