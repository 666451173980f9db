#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dmsn/config_file.hpp"
#include "dmsn/data/dataset_io.hpp"
#include "dmsn/data/events.hpp"

namespace dmsn {

// Planted-intent travel log generator. Each user has a home city whose
// events dominate the older history and an intent city. With probability
// `signal` the longest multi-product planning session of the last few days
// is about the intent city; otherwise it is about an unrelated city. Shorter
// decoy sessions about other cities share the same window.
struct SyntheticConfig {
  int n_users = 5000;
  int n_cities = 200;
  int min_history_events = 6;
  int max_history_events = 16;
  double signal = 0.8;
  double noise = 0.05;
  int neg_ratio = 4;
  int n_items = 1000;
  std::uint64_t seed = 42;

  void validate() const;
  static SyntheticConfig from_key_values(const KeyValueConfig& kv);
  KeyValueConfig to_key_values() const;
};

struct UserTruth {
  std::int64_t user_id = 0;
  int intent_city = 0;
  int home_city = 0;
  bool signal_user = false;
};

struct SyntheticCorpus {
  std::vector<SampleRecord> train, valid, test;
  std::vector<UserTruth> truth;  // ordered by user_id

  IntentTable intent_table() const;
  const UserTruth& truth_for(std::int64_t user_id) const;
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

// Writes train.jsonl, valid.jsonl, test.jsonl and intent.tsv into `dir`.
void write_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus);

// Vacation-item catalogue and item-click task over the same users. Each item
// belongs to one city; clicked items come from the user's intent city.
struct ItemCatalog {
  std::vector<int> item_city;   // index = item id, entry 0 unused
  std::vector<double> appeal;   // index = item id
  int n_items() const { return static_cast<int>(item_city.size()) - 1; }
};

struct ItemRecord {
  SampleRecord record;  // candidate_city = city of `item`
  int item = 0;
};

struct ItemTask {
  ItemCatalog catalog;
  std::vector<ItemRecord> train, valid, test;
};

ItemTask generate_item_task(const SyntheticConfig& config, const SyntheticCorpus& corpus);

}  // namespace dmsn
