#include "dmsn/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dmsn/error.hpp"
#include "dmsn/eval/auc.hpp"
#include "dmsn/numerics/adam.hpp"
#include "dmsn/random.hpp"

namespace dmsn {

const std::vector<std::string_view>& train_config_keys() {
  static const std::vector<std::string_view> keys = [] {
    std::vector<std::string_view> k = {"batch_size", "max_epochs", "patience", "learning_rate", "seed"};
    const auto& v = variant_keys();
    k.insert(k.end(), v.begin(), v.end());
    return k;
  }();
  return keys;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be at least 1");
  if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs must be at least 1");
  if (patience < 1) throw std::invalid_argument("train config: patience must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("train config: learning_rate must be finite and nonnegative");
  }
  variant.validate();
}

void TrainConfig::apply(const KeyValueConfig& kv) {
  kv.reject_unknown(train_config_keys());
  for (const auto& key : kv.keys()) {
    const auto& v = kv.get(key);
    if (key == "batch_size") {
      const auto b = parse_int(v, key);
      if (b < 1) throw std::invalid_argument("train config: batch_size must be at least 1");
      batch_size = static_cast<std::size_t>(b);
    } else if (key == "max_epochs") {
      max_epochs = static_cast<int>(parse_int(v, key));
    } else if (key == "patience") {
      patience = static_cast<int>(parse_int(v, key));
    } else if (key == "learning_rate") {
      learning_rate = parse_double(v, key);
    } else if (key == "seed") {
      seed = static_cast<std::uint64_t>(parse_int(v, key));
    }
  }
  variant.apply(kv);
}

TrainConfig TrainConfig::from_key_values(const KeyValueConfig& kv) {
  TrainConfig c;
  c.apply(kv);
  c.validate();
  return c;
}

KeyValueConfig TrainConfig::to_key_values() const {
  KeyValueConfig kv;
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("max_epochs", std::to_string(max_epochs));
  kv.set("patience", std::to_string(patience));
  std::ostringstream lr;
  lr << std::setprecision(17) << learning_rate;
  kv.set("learning_rate", lr.str());
  kv.set("seed", std::to_string(seed));
  const auto v = variant.to_key_values();
  for (const auto& k : v.keys()) kv.set(k, v.get(k));
  return kv;
}

LabeledSet prepare(const std::vector<SampleRecord>& records, const VariantSpec& spec) {
  LabeledSet set;
  set.inputs.reserve(records.size());
  set.labels.reserve(records.size());
  for (const auto& r : records) {
    set.inputs.push_back(make_input(r, spec));
    set.labels.push_back(r.label);
  }
  return set;
}

std::vector<double> predict_all(const Network& net, const ParamSet& params, const std::vector<ModelInput>& inputs) {
  std::vector<double> scores;
  scores.reserve(inputs.size());
  for (const auto& in : inputs) scores.push_back(net.predict(in, params));
  return scores;
}

double mean_loss(const Network& net, const ParamSet& params, const LabeledSet& set) {
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) total += logistic_loss(set.labels[i], net.predict(set.inputs[i], params));
  return total / static_cast<double>(set.size());
}

namespace {

void zero_padding_rows(const Network& net, ParamSet& params) {
  for (std::size_t idx : net.padded_tables()) {
    Tensor& t = params[idx];
    std::fill(t.row(0), t.row(0) + t.cols(), 0.0);
  }
}

std::string first_non_finite(const ParamSet& grads) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].all_finite()) return grads.name(i);
  }
  return "(none)";
}

}  // namespace

TrainResult train(const LabeledSet& train_set, const LabeledSet& valid_set, const TrainConfig& config,
                  std::ostream* log) {
  config.validate();
  if (train_set.size() == 0 || valid_set.size() == 0) {
    throw std::invalid_argument("train: training and validation sets must be nonempty");
  }
  const Network net(config.variant);
  TrainResult result{net.init_params(config.seed), {}};
  ParamSet params = result.params.tensors;
  ParamSet grads = params.zeros_like();
  std::vector<AdamState> adam;
  adam.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) adam.emplace_back(params[i]);
  AdamHyper hyper;
  hyper.learning_rate = config.learning_rate;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  double best_auc = -1.0;
  int since_best = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(derive_seed(config.seed, 0xe0c0ULL + static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      grads.set_zero();
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        batch_loss += net.loss_and_grad(train_set.inputs[i], train_set.labels[i], params, grads, scale);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index) + "; first non-finite gradient: " + first_non_finite(grads));
      }
      for (std::size_t p = 0; p < params.size(); ++p) {
        if (!grads[p].all_finite()) {
          throw NumericalError("non-finite gradient for '" + grads.name(p) + "' at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_index));
        }
      }
      for (std::size_t p = 0; p < params.size(); ++p) adam_step(params[p], grads[p], adam[p], hyper);
      zero_padding_rows(net, params);
      loss_sum += batch_loss;
    }
    const auto scores = predict_all(net, params, valid_set.inputs);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.valid_auc = auc(scores, valid_set.labels);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(rec);
    if (log) {
      *log << "epoch " << epoch << " train_loss " << std::fixed << std::setprecision(6) << rec.train_loss
           << " valid_auc " << rec.valid_auc << " (" << std::setprecision(1) << rec.seconds << "s)\n"
           << std::defaultfloat << std::flush;
    }
    if (rec.valid_auc > best_auc) {
      best_auc = rec.valid_auc;
      result.history.best_epoch = static_cast<int>(result.history.epochs.size()) - 1;
      result.params.tensors = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

TrainResult train(const std::vector<SampleRecord>& train_records, const std::vector<SampleRecord>& valid_records,
                  const TrainConfig& config, std::ostream* log) {
  config.validate();
  return train(prepare(train_records, config.variant), prepare(valid_records, config.variant), config, log);
}

void write_history(std::ostream& out, const TrainHistory& history) {
  out << "epoch\ttrain_loss\tvalid_auc\n";
  out << std::setprecision(17);
  for (const auto& e : history.epochs) out << e.epoch << '\t' << e.train_loss << '\t' << e.valid_auc << '\n';
  out << "best_epoch\t" << (history.best_epoch >= 0 ? history.epochs[history.best_epoch].epoch : 0) << '\n';
}

namespace {

std::uint64_t fingerprint(const TrainConfig& c) {
  KeyValueConfig kv = c.to_key_values();
  kv.set("seed", "0");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : kv.to_text()) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}

}  // namespace

GridResult grid_search(const std::vector<SampleRecord>& train_records, const std::vector<SampleRecord>& valid_records,
                       const std::vector<TrainConfig>& grid, std::uint64_t master_seed, std::ostream* log) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  GridResult result;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    TrainConfig cfg = grid[i];
    cfg.seed = derive_seed(master_seed, fingerprint(cfg));
    if (log) *log << "grid config " << i << "\n";
    const TrainResult tr = train(train_records, valid_records, cfg, log);
    const auto& best = tr.history.epochs[static_cast<std::size_t>(tr.history.best_epoch)];
    result.rows.push_back({cfg, best.valid_auc, best.epoch});
    if (result.rows.back().valid_auc > result.rows[result.best_index].valid_auc) result.best_index = i;
  }
  return result;
}

std::vector<KeyValueConfig> expand_grid(const KeyValueConfig& kv) {
  std::vector<KeyValueConfig> out(1);
  for (const auto& key : kv.keys()) {
    std::vector<std::string> alternatives;
    std::string_view v = kv.get(key);
    while (true) {
      const auto bar = v.find('|');
      alternatives.emplace_back(v.substr(0, bar));
      if (bar == std::string_view::npos) break;
      v.remove_prefix(bar + 1);
    }
    std::vector<KeyValueConfig> next;
    for (const auto& partial : out) {
      for (const auto& alt : alternatives) {
        KeyValueConfig c = partial;
        c.set(key, alt);
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace dmsn
