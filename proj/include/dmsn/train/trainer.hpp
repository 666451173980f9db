#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dmsn/config_file.hpp"
#include "dmsn/data/events.hpp"
#include "dmsn/model/network.hpp"
#include "dmsn/model/params.hpp"

namespace dmsn {

struct TrainConfig {
  std::size_t batch_size = 64;
  int max_epochs = 10;
  int patience = 3;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  VariantSpec variant;

  void validate() const;
  // Applies known keys over the current values; unknown keys are rejected.
  void apply(const KeyValueConfig& kv);
  static TrainConfig from_key_values(const KeyValueConfig& kv);
  KeyValueConfig to_key_values() const;
};

const std::vector<std::string_view>& train_config_keys();

struct LabeledSet {
  std::vector<ModelInput> inputs;
  std::vector<int> labels;
  std::size_t size() const noexcept { return inputs.size(); }
};

LabeledSet prepare(const std::vector<SampleRecord>& records, const VariantSpec& spec);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_auc = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // index into epochs
};

struct TrainResult {
  ModelParams params;  // parameters of the best validation epoch
  TrainHistory history;
};

std::vector<double> predict_all(const Network& net, const ParamSet& params, const std::vector<ModelInput>& inputs);

// Mean logistic loss over the set with the given parameters.
double mean_loss(const Network& net, const ParamSet& params, const LabeledSet& set);

// Mini-batch Adam with per-epoch seeded shuffling and early stopping on
// validation AUC. `log` receives one line per epoch when non-null.
TrainResult train(const LabeledSet& train_set, const LabeledSet& valid_set, const TrainConfig& config,
                  std::ostream* log = nullptr);
TrainResult train(const std::vector<SampleRecord>& train_records, const std::vector<SampleRecord>& valid_records,
                  const TrainConfig& config, std::ostream* log = nullptr);

// Writes "epoch\ttrain_loss\tvalid_auc" rows plus a best_epoch line; no
// wall-clock values so the file is reproducible.
void write_history(std::ostream& out, const TrainHistory& history);

struct GridRow {
  TrainConfig config;
  double valid_auc = 0.0;
  int best_epoch = 0;
};

struct GridResult {
  std::size_t best_index = 0;
  std::vector<GridRow> rows;
};

// Every config is trained with a seed derived from the master seed and the
// config's own content, so duplicated configs reproduce each other. Ties go
// to the earlier grid position.
GridResult grid_search(const std::vector<SampleRecord>& train_records, const std::vector<SampleRecord>& valid_records,
                       const std::vector<TrainConfig>& grid, std::uint64_t master_seed, std::ostream* log = nullptr);

// Expands "key=a|b|c" alternatives into the cartesian product, in key order.
std::vector<KeyValueConfig> expand_grid(const KeyValueConfig& kv);

}  // namespace dmsn
