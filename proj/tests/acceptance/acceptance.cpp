// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dmsn/cli/cli.hpp"
#include "dmsn/data/synthetic.hpp"
#include "dmsn/eval/attention_dump.hpp"
#include "dmsn/eval/auc.hpp"
#include "dmsn/eval/fusing.hpp"
#include "dmsn/eval/report.hpp"
#include "dmsn/eval/two_stage.hpp"
#include "dmsn/model/gradient_suite.hpp"
#include "dmsn/model/layers.hpp"
#include "dmsn/model/network.hpp"
#include "dmsn/numerics/adam.hpp"
#include "dmsn/random.hpp"
#include "dmsn/train/trainer.hpp"
#include "oracles.hpp"

using namespace dmsn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

constexpr double kMinGap = 0.005;

// Shared state for the criteria that train on the reference corpus.
struct Reference {
  SyntheticConfig config;
  SyntheticCorpus corpus;
  TrainConfig desk;
  std::vector<std::pair<VariantKind, EvalReport>> variants;
  ModelParams atmc;
};

Reference& reference() {
  static Reference ref = [] {
    Reference r;
    r.config.n_users = 5000;
    r.config.n_cities = 200;
    r.config.signal = 0.8;
    r.config.noise = 0.05;
    r.config.seed = 42;
    r.corpus = generate_synthetic(r.config);
    r.desk.variant.n_cities = r.config.n_cities;
    return r;
  }();
  return ref;
}

// 1 -------------------------------------------------------------------------
Outcome gradient_suite() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string where;
  for (auto kind : {VariantKind::mlp, VariantKind::atrnn, VariantKind::atmc, VariantKind::mc}) {
    for (auto strategy : {FusionStrategy::global, FusionStrategy::per_stream}) {
      const VariantSpec spec = gradient_check_spec(kind, strategy);
      const SampleRecord record = gradient_check_record(spec.max_len, spec.n_cities, 7);
      for (const auto& row : check_gradients(spec, record, 7)) {
        if (row.max_rel_error >= worst) {
          worst = row.max_rel_error;
          where = row.variant + ":" + row.tensor;
        }
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 60.0,
          "max relative error " + fmt("%.2e", worst) + " (" + where + "), " + fmt("%.1f", secs) + " s"};
}

// 2 -------------------------------------------------------------------------
Outcome attention_invariants() {
  bool ok = true;
  std::size_t heads = 0;
  double worst_sum = 0.0;
  Rng rng(2024);

  // Layer level: random states with interior masked positions.
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 1 + rng.below(50);
    Tensor states({8, len}), t({4, len}), x_o({10}), w_a({10, 12});
    for (double& v : states.values()) v = rng.uniform(-2, 2);
    for (double& v : t.values()) v = rng.uniform(-1, 1);
    for (double& v : x_o.values()) v = rng.uniform(-1, 1);
    for (double& v : w_a.values()) v = rng.uniform(-3, 3);
    std::vector<std::uint8_t> mask(len);
    for (auto& m : mask) m = rng.bernoulli(0.6);
    mask[rng.below(len)] = 1;
    const auto res = layers::status_attention(x_o, states, t, mask, w_a);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      ok = ok && res.weights[i] >= 0.0 && (mask[i] || res.weights[i] == 0.0);
      sum += res.weights[i];
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    for (std::size_t r = 0; r < 8; ++r) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = 0; i < len; ++i)
        if (mask[i]) {
          lo = std::min(lo, states(r, i));
          hi = std::max(hi, states(r, i));
        }
      ok = ok && res.context[r] >= lo - 1e-12 && res.context[r] <= hi + 1e-12;
    }
  }

  // Model level: 1000 generated records through both attention variants.
  SyntheticConfig cfg;
  cfg.n_users = 400;
  cfg.seed = 77;
  const auto corpus = generate_synthetic(cfg);
  std::vector<SampleRecord> records = corpus.train;
  if (records.size() < 1000) throw std::runtime_error("too few generated records");
  records.resize(1000);
  for (auto kind : {VariantKind::atrnn, VariantKind::atmc}) {
    for (auto strategy : {FusionStrategy::global, FusionStrategy::per_stream}) {
      VariantSpec spec;
      spec.kind = kind;
      spec.strategy = strategy;
      spec.n_cities = cfg.n_cities;
      const Network net(spec);
      const ModelParams mp = net.init_params(static_cast<std::uint64_t>(kind) * 10 + static_cast<int>(strategy));
      for (const auto& rec : records) {
        AttentionTrace trace;
        const ModelInput input = make_input(rec, spec);
        net.predict(input, mp.tensors, &trace);
        for (const auto& h : trace.heads) {
          ++heads;
          const auto& seq = input.sequences[static_cast<std::size_t>(h.branch)];
          ok = ok && h.weights.size() == seq.unmasked_count();
          double sum = 0.0;
          for (std::size_t i = 0; i < h.weights.size(); ++i) {
            ok = ok && h.weights[i] >= 0.0 && seq.mask[h.positions[i]];
            sum += h.weights[i];
          }
          worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
          for (std::size_t r = 0; r < h.states.rows(); ++r) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t i = 0; i < h.states.cols(); ++i) {
              lo = std::min(lo, h.states(r, i));
              hi = std::max(hi, h.states(r, i));
            }
            ok = ok && h.context[r] >= lo - 1e-12 && h.context[r] <= hi + 1e-12;
          }
        }
      }
    }
  }
  ok = ok && worst_sum <= 1e-9;
  return {ok, "1000 random masked layer inputs + " + std::to_string(heads) +
                  " model heads on 1000 records; worst |sum-1| " + fmt("%.1e", worst_sum)};
}

// 3 -------------------------------------------------------------------------
Outcome auc_oracle() {
  Rng rng(99);
  int matches = 0, tie_heavy = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(1999);
    const bool ties = trial % 2 == 0;
    if (ties) ++tie_heavy;
    const std::uint64_t levels = ties ? 1 + rng.below(5) : 1000000000ULL;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(levels)) / 7.0;
      y[i] = rng.bernoulli(0.1 + 0.8 * rng.uniform()) ? 1 : 0;
    }
    y[rng.below(n / 2)] = 1;
    y[n / 2 + rng.below(n - n / 2)] = 0;
    if (auc(s, y) == oracle::pairwise_auc(s, y)) ++matches;
  }
  return {matches == 100, std::to_string(matches) + "/100 exact matches (" + std::to_string(tie_heavy) +
                              " tie-heavy instances)"};
}

// 4 -------------------------------------------------------------------------
Outcome time_transform_checks() {
  const double zero[] = {0.0};
  Tensor wb({5, 1});
  for (std::size_t i = 0; i < 5; ++i) wb[i] = -3.0 + 1.7 * static_cast<double>(i);
  const Tensor t0 = layers::time_transform(zero, wb);
  bool zero_ok = true;
  for (double v : t0.values()) zero_ok = zero_ok && v == 0.0;
  const double tau[] = {std::exp(1.0) - 1.0};
  const double t1 = layers::time_transform(tau, Tensor({1, 1}, 1.0))[0];
  const bool scalar_ok = std::abs(t1 - 0.761594) <= 1e-6;
  return {zero_ok && scalar_ok, "T(0) exact zero: " + std::string(zero_ok ? "yes" : "no") +
                                    ", T(e-1) = " + fmt("%.7f", t1)};
}

// 5 -------------------------------------------------------------------------
Outcome fusion_ordering() {
  auto& ref = reference();
  const auto start = Clock::now();
  const auto rows = compare_fusing(ref.corpus.train, ref.corpus.valid, ref.corpus.test, ref.desk);
  const double secs = seconds_since(start);
  double best_single = 0.0;
  std::string table;
  for (std::size_t i = 0; i < 5; ++i) best_single = std::max(best_single, rows[i].test_auc);
  for (const auto& r : rows) table += r.label + "=" + fmt("%.4f", r.test_auc) + " ";
  const double s1 = rows[5].test_auc, s2 = rows[6].test_auc;
  const bool ok = s1 - s2 >= kMinGap && s2 - best_single >= kMinGap && secs < 1800.0;
  return {ok, table + "| " + fmt("%.0f", secs) + " s"};
}

// 6 -------------------------------------------------------------------------
Outcome variant_ordering() {
  auto& ref = reference();
  std::map<VariantKind, double> score;
  std::string detail;
  for (auto kind : {VariantKind::mlp, VariantKind::atrnn, VariantKind::atmc, VariantKind::mc}) {
    TrainConfig c = ref.desk;
    c.variant.kind = kind;
    const auto result = train(ref.corpus.train, ref.corpus.valid, c);
    const auto report = evaluate(result.params, ref.corpus.test, std::string(to_string(kind)), "test");
    score[kind] = report.auc;
    detail += std::string(to_string(kind)) + "=" + fmt("%.4f", report.auc) + " ";
    if (kind == VariantKind::atmc) ref.atmc = result.params;
  }
  const bool ok = score[VariantKind::atmc] - score[VariantKind::atrnn] >= kMinGap &&
                  score[VariantKind::atrnn] - score[VariantKind::mlp] >= kMinGap &&
                  score[VariantKind::atmc] - score[VariantKind::mc] >= kMinGap;
  return {ok, detail};
}

// 7 -------------------------------------------------------------------------
Outcome two_stage() {
  auto& ref = reference();
  const ItemTask task = generate_item_task(ref.config, ref.corpus);
  TrainConfig item_cfg = ref.desk;
  item_cfg.variant.n_candidates = task.catalog.n_items();
  const auto item_model =
      train(prepare_items(task.train, item_cfg.variant), prepare_items(task.valid, item_cfg.variant), item_cfg);
  const auto res = evaluate_two_stage(ref.atmc, item_model.params, task.test);
  return {res.two_stage_auc - res.direct_auc >= kMinGap,
          "direct " + fmt("%.4f", res.direct_auc) + ", two-stage " + fmt("%.4f", res.two_stage_auc) + " on " +
              std::to_string(task.test.size()) + " item records"};
}

// 8 -------------------------------------------------------------------------
Outcome attention_localization() {
  auto& ref = reference();
  const Network net(ref.atmc.spec);
  double intent_mass = 0.0, decoy_mass = 0.0;
  std::size_t n = 0;
  for (const auto& rec : ref.corpus.test) {
    if (rec.label != 1) continue;
    const auto& truth = ref.corpus.truth_for(rec.user_id);
    AttentionTrace trace;
    net.predict(make_input(rec, ref.atmc.spec), ref.atmc.tensors, &trace);
    double in = 0.0, de = 0.0;
    for (const auto& h : trace.heads) {
      in += head_mass(h, truth.intent_city);
      de += head_mass(h, truth.home_city);
    }
    intent_mass += in / static_cast<double>(trace.heads.size());
    decoy_mass += de / static_cast<double>(trace.heads.size());
    ++n;
  }
  intent_mass /= static_cast<double>(n);
  decoy_mass /= static_cast<double>(n);
  return {n >= 100 && intent_mass > decoy_mass, std::to_string(n) + " held-out positives; mean mass intent " +
                                                    fmt("%.4f", intent_mass) + " vs decoy (home) " +
                                                    fmt("%.4f", decoy_mass)};
}

// 9 -------------------------------------------------------------------------
Outcome overfit_probe() {
  auto& ref = reference();
  const std::vector<SampleRecord> batch(ref.corpus.train.begin(), ref.corpus.train.begin() + 32);
  bool ok = true;
  std::string detail;
  for (auto strategy : {FusionStrategy::global, FusionStrategy::per_stream}) {
    for (auto kind : {VariantKind::mlp, VariantKind::atrnn, VariantKind::atmc, VariantKind::mc}) {
      VariantSpec spec = ref.desk.variant;
      spec.kind = kind;
      spec.strategy = strategy;
      const Network net(spec);
      ModelParams mp = net.init_params(11);
      std::vector<ModelInput> inputs;
      for (const auto& r : batch) inputs.push_back(make_input(r, spec));
      std::vector<AdamState> states;
      for (std::size_t i = 0; i < mp.tensors.size(); ++i) states.emplace_back(mp.tensors[i]);
      const auto padded = net.padded_tables();
      int reached = -1;
      double loss = 0.0;
      for (int step = 0; step <= 500; ++step) {
        ParamSet grads = mp.tensors.zeros_like();
        loss = 0.0;
        for (std::size_t k = 0; k < inputs.size(); ++k)
          loss += net.loss_and_grad(inputs[k], batch[k].label, mp.tensors, grads, 1.0 / 32.0);
        loss /= 32.0;
        if (loss < 0.05) {
          reached = step;
          break;
        }
        if (step == 500) break;
        for (std::size_t i = 0; i < mp.tensors.size(); ++i) adam_step(mp.tensors[i], grads[i], states[i], AdamHyper{});
        for (std::size_t i : padded) std::fill(mp.tensors[i].row(0), mp.tensors[i].row(0) + mp.tensors[i].cols(), 0.0);
      }
      ok = ok && reached >= 0;
      detail += std::string(to_string(kind)) + (strategy == FusionStrategy::global ? "/I" : "/II") + "@" +
                (reached >= 0 ? std::to_string(reached) : "never(" + fmt("%.3f", loss) + ")") + " ";
    }
  }
  return {ok, "steps to mean loss < 0.05: " + detail};
}

// 10 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  const fs::path root = fs::current_path() / "acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "synthetic.cfg") << "n_users = 400\nn_cities = 200\nsignal = 0.8\nnoise = 0.05\nseed = 9\n";
    std::ofstream(root / "train.cfg") << "variant = atmc\nstrategy = 1\nn_cities = 200\nmax_epochs = 2\nseed = 3\n";
  }
  std::ostringstream sink;
  auto run_once = [&](const std::string& tag) {
    const fs::path dir = root / tag;
    const std::string d = dir.string(), r = root.string();
    int rc = cli::run({"generate", "--config", r + "/synthetic.cfg", "--out", d + "/data"}, sink, sink);
    rc |= cli::run({"train", "--config", r + "/train.cfg", "--data", d + "/data/train.jsonl", "--valid",
                    d + "/data/valid.jsonl", "--checkpoint", d + "/model.ckpt", "--out", d + "/history.tsv"},
                   sink, sink);
    rc |= cli::run({"evaluate", "--checkpoint", d + "/model.ckpt", "--test", d + "/data/test.jsonl", "--out",
                    d + "/report.json"},
                   sink, sink);
    rc |= cli::run({"dump-attention", "--checkpoint", d + "/model.ckpt", "--test", d + "/data/test.jsonl", "--out",
                    d + "/trace.csv"},
                   sink, sink);
    return rc;
  };
  const int rc = run_once("a") | run_once("b");
  const char* files[] = {"data/train.jsonl", "data/valid.jsonl", "data/test.jsonl", "data/intent.tsv",
                         "model.ckpt",       "history.tsv",      "report.json",     "trace.csv"};
  int identical = 0;
  for (const char* f : files) {
    const std::string a = slurp(root / "a" / f), b = slurp(root / "b" / f);
    if (!a.empty() && a == b) ++identical;
  }
  return {rc == 0 && identical == 8,
          std::to_string(identical) + "/8 output files byte-identical, exit status " + std::to_string(rc)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient suite", gradient_suite},
      {2, "attention invariants", attention_invariants},
      {3, "AUC oracle equivalence", auc_oracle},
      {4, "time-transform checks", time_transform_checks},
      {5, "fusion ordering I > II > single streams", fusion_ordering},
      {6, "variant ordering ATMC > ATRNN > MLP, ATMC > MC", variant_ordering},
      {7, "two-stage beats direct item scoring", two_stage},
      {8, "attention localization on intent city", attention_localization},
      {9, "overfit probe", overfit_probe},
      {10, "CLI determinism", cli_determinism},
  };
  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    ++ran;
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << ": " << o.detail
              << std::endl;
  }
  std::cout << (ran - failures) << "/" << ran
            << " acceptance criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
