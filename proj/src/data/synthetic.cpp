#include "dmsn/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <map>
#include <stdexcept>

#include "dmsn/error.hpp"
#include "dmsn/random.hpp"

namespace dmsn {

namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kEpochBase = 1575158400;  // 2019-12-01T00:00:00Z

constexpr double kHomeShare = 0.5;
constexpr double kRecentWindowDays = 4.0;
constexpr double kHistoryMinDays = 5.0;
constexpr double kHistoryMaxDays = 60.0;
constexpr int kBurstMin = 3;
constexpr int kBurstMax = 4;
constexpr int kDecoySessions = 3;
constexpr int kDecoyMin = 2;

constexpr double kProductWeights[kNumProductTypes] = {0.2, 0.2, 0.3, 0.2, 0.1};
constexpr double kBackgroundActions[kNumActionTypes] = {0.75, 0.10, 0.15};
constexpr double kBurstActions[kNumActionTypes] = {0.5, 0.3, 0.2};

struct Samplers {
  std::vector<double> city_cdf;  // over ids 1..n, stored at index id-1
  std::vector<double> product_cdf;
  std::vector<double> background_action_cdf;
  std::vector<double> burst_action_cdf;

  explicit Samplers(int n_cities) {
    std::vector<double> w(n_cities);
    for (int c = 0; c < n_cities; ++c) w[c] = 1.0 / std::pow(c + 1.0, 0.9);
    city_cdf = cumulative_weights(w);
    product_cdf = cumulative_weights(kProductWeights);
    background_action_cdf = cumulative_weights(kBackgroundActions);
    burst_action_cdf = cumulative_weights(kBurstActions);
  }

  int city(Rng& rng) const { return static_cast<int>(rng.pick(city_cdf)) + 1; }
  int city_except(Rng& rng, std::initializer_list<int> excluded) const {
    while (true) {
      const int c = city(rng);
      if (std::find(excluded.begin(), excluded.end(), c) == excluded.end()) return c;
    }
  }
  ProductType product(Rng& rng) const { return static_cast<ProductType>(rng.pick(product_cdf)); }
  ActionType action(Rng& rng, bool burst) const {
    return static_cast<ActionType>(rng.pick(burst ? burst_action_cdf : background_action_cdf));
  }
};

StatusFeatures status_for(std::int64_t query_ts, Rng& rng) {
  const std::time_t t = static_cast<std::time_t>(query_ts);
  std::tm tm{};
  gmtime_r(&t, &tm);
  StatusFeatures s;
  s.trip_status = rng.range(0, kStatusFeatureVocab[0] - 1);
  s.days_to_departure_bucket = rng.range(0, kStatusFeatureVocab[1] - 1);
  s.month = tm.tm_mon + 1;
  s.season = (s.month % 12) / 3;
  s.hour = tm.tm_hour;
  return s;
}

std::int64_t days_before(std::int64_t query_ts, double days) {
  return query_ts - static_cast<std::int64_t>(std::llround(days * static_cast<double>(kDay)));
}

struct UserDraw {
  UserTruth truth;
  SampleRecord base;  // candidate/label unset
};

UserDraw draw_user(const SyntheticConfig& cfg, const Samplers& s, std::int64_t user_id, Rng& rng) {
  UserDraw u;
  auto& r = u.base;
  r.user_id = user_id;
  r.user = {rng.range(0, kUserFeatureVocab[0] - 1), rng.range(0, kUserFeatureVocab[1] - 1),
            rng.range(0, kUserFeatureVocab[2] - 1)};
  r.query_ts = kEpochBase + static_cast<std::int64_t>(rng.below(31 * kDay));
  r.status = status_for(r.query_ts, rng);

  const int home = s.city(rng);
  const int intent = s.city_except(rng, {home});
  u.truth = {user_id, intent, home, rng.bernoulli(cfg.signal)};

  const int n_history = rng.range(cfg.min_history_events, cfg.max_history_events);
  for (int i = 0; i < n_history; ++i) {
    const int city = rng.bernoulli(kHomeShare) ? home : s.city(rng);
    r.events.push_back({days_before(r.query_ts, rng.uniform(kHistoryMinDays, kHistoryMaxDays)), city,
                        s.product(rng), s.action(rng, false)});
  }

  // Recent planning sessions, each a run of multi-product events minutes
  // apart. Decoy sessions are strictly shorter than the burst session.
  const int burst_city = u.truth.signal_user ? intent : s.city_except(rng, {intent});
  auto session = [&](int city, int length) {
    std::vector<int> products = {0, 1, 2, 3, 4};
    rng.shuffle(products);
    std::int64_t ts = days_before(r.query_ts, rng.uniform(0.2, kRecentWindowDays));
    for (int i = 0; i < length; ++i) {
      r.events.push_back({ts, city, static_cast<ProductType>(products[i % 5]), s.action(rng, true)});
      ts += static_cast<std::int64_t>(rng.uniform(300.0, 2400.0));
    }
  };
  const int burst_len = rng.range(kBurstMin, kBurstMax);
  session(burst_city, burst_len);
  std::vector<int> taken = {intent, home, burst_city};
  for (int d = 0; d < kDecoySessions; ++d) {
    int city = 0;
    do {
      city = s.city(rng);
    } while (std::find(taken.begin(), taken.end(), city) != taken.end());
    taken.push_back(city);
    session(city, rng.range(kDecoyMin, burst_len - 1));
  }
  // Events are stored in generation order; consumers sort by time.
  return u;
}

void append_samples(const SyntheticConfig& cfg, const Samplers& s, const UserDraw& u, Rng& rng,
                    std::vector<SampleRecord>& out) {
  std::vector<int> candidates = {u.truth.intent_city};
  while (static_cast<int>(candidates.size()) < cfg.neg_ratio + 1) {
    const int c = s.city(rng);
    if (std::find(candidates.begin(), candidates.end(), c) == candidates.end()) candidates.push_back(c);
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    SampleRecord r = u.base;
    r.candidate_city = candidates[i];
    r.label = i == 0 ? 1 : 0;
    if (rng.bernoulli(cfg.noise)) r.label = 1 - r.label;
    out.push_back(std::move(r));
  }
}

}  // namespace

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("synthetic config: " + m); };
  if (n_users <= 0) fail("n_users must be positive");
  if (n_cities < 8) fail("n_cities must be at least 8");
  if (min_history_events <= 0 || max_history_events < min_history_events) {
    fail("history event bounds must satisfy 0 < min_history_events <= max_history_events");
  }
  if (signal < 0.0 || signal > 1.0) fail("signal must lie in [0,1]");
  if (noise < 0.0 || noise > 1.0) fail("noise must lie in [0,1]");
  if (neg_ratio <= 0 || neg_ratio >= n_cities) fail("neg_ratio must lie in [1, n_cities)");
  if (n_items < n_cities) fail("n_items must be at least n_cities");
}

namespace {
const std::vector<std::string_view> kSyntheticKeys = {"n_users", "n_cities", "min_history_events",
                                                      "max_history_events", "signal", "noise",
                                                      "neg_ratio", "n_items", "seed"};
}

SyntheticConfig SyntheticConfig::from_key_values(const KeyValueConfig& kv) {
  kv.reject_unknown(kSyntheticKeys);
  SyntheticConfig c;
  for (const auto& key : kv.keys()) {
    const auto& v = kv.get(key);
    if (key == "n_users") c.n_users = static_cast<int>(parse_int(v, key));
    else if (key == "n_cities") c.n_cities = static_cast<int>(parse_int(v, key));
    else if (key == "min_history_events") c.min_history_events = static_cast<int>(parse_int(v, key));
    else if (key == "max_history_events") c.max_history_events = static_cast<int>(parse_int(v, key));
    else if (key == "signal") c.signal = parse_double(v, key);
    else if (key == "noise") c.noise = parse_double(v, key);
    else if (key == "neg_ratio") c.neg_ratio = static_cast<int>(parse_int(v, key));
    else if (key == "n_items") c.n_items = static_cast<int>(parse_int(v, key));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(v, key));
  }
  c.validate();
  return c;
}

KeyValueConfig SyntheticConfig::to_key_values() const {
  KeyValueConfig kv;
  kv.set("n_users", std::to_string(n_users));
  kv.set("n_cities", std::to_string(n_cities));
  kv.set("min_history_events", std::to_string(min_history_events));
  kv.set("max_history_events", std::to_string(max_history_events));
  kv.set("signal", std::to_string(signal));
  kv.set("noise", std::to_string(noise));
  kv.set("neg_ratio", std::to_string(neg_ratio));
  kv.set("n_items", std::to_string(n_items));
  kv.set("seed", std::to_string(seed));
  return kv;
}

IntentTable SyntheticCorpus::intent_table() const {
  IntentTable t;
  t.reserve(truth.size());
  for (const auto& u : truth) t.emplace_back(u.user_id, u.intent_city);
  return t;
}

const UserTruth& SyntheticCorpus::truth_for(std::int64_t user_id) const {
  auto it = std::lower_bound(truth.begin(), truth.end(), user_id,
                             [](const UserTruth& u, std::int64_t id) { return u.user_id < id; });
  if (it == truth.end() || it->user_id != user_id) {
    throw std::out_of_range("no ground truth for user " + std::to_string(user_id));
  }
  return *it;
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  const Samplers samplers(config.n_cities);

  // Split assignment: 70/15/15 by user over a seeded permutation.
  std::vector<int> order(config.n_users);
  for (int i = 0; i < config.n_users; ++i) order[i] = i;
  Rng split_rng(derive_seed(config.seed, 0));
  split_rng.shuffle(order);
  std::vector<int> split_of(config.n_users);
  const int n_train = config.n_users * 70 / 100;
  const int n_valid = config.n_users * 15 / 100;
  for (int rank = 0; rank < config.n_users; ++rank) {
    split_of[order[rank]] = rank < n_train ? 0 : (rank < n_train + n_valid ? 1 : 2);
  }

  SyntheticCorpus corpus;
  corpus.truth.reserve(config.n_users);
  for (int i = 0; i < config.n_users; ++i) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i) + 1));
    const UserDraw u = draw_user(config, samplers, i + 1, rng);
    corpus.truth.push_back(u.truth);
    auto& split = split_of[i] == 0 ? corpus.train : (split_of[i] == 1 ? corpus.valid : corpus.test);
    append_samples(config, samplers, u, rng, split);
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(dir);
  write_dataset(dir / "train.jsonl", corpus.train);
  write_dataset(dir / "valid.jsonl", corpus.valid);
  write_dataset(dir / "test.jsonl", corpus.test);
  write_intent_table(dir / "intent.tsv", corpus.intent_table());
}

namespace {

std::vector<ItemRecord> item_split(const SyntheticConfig& cfg, const SyntheticCorpus& corpus,
                                   const ItemCatalog& catalog,
                                   const std::vector<std::vector<int>>& items_by_city,
                                   const std::vector<SampleRecord>& records, std::uint64_t salt) {
  std::vector<ItemRecord> out;
  std::int64_t last_user = -1;
  for (const auto& rec : records) {
    if (rec.user_id == last_user) continue;
    last_user = rec.user_id;
    Rng rng(derive_seed(cfg.seed ^ salt, static_cast<std::uint64_t>(rec.user_id)));
    const auto& truth = corpus.truth_for(rec.user_id);

    const auto& pool = items_by_city[truth.intent_city];
    std::vector<double> w;
    for (int item : pool) w.push_back(catalog.appeal[item]);
    const int positive = pool[rng.pick(cumulative_weights(w))];

    std::vector<int> chosen = {positive};
    while (static_cast<int>(chosen.size()) < cfg.neg_ratio + 1) {
      const int item = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(catalog.n_items())));
      if (std::find(chosen.begin(), chosen.end(), item) == chosen.end()) chosen.push_back(item);
    }
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      ItemRecord ir{rec, chosen[i]};
      ir.record.candidate_city = catalog.item_city[chosen[i]];
      ir.record.label = i == 0 ? 1 : 0;
      if (rng.bernoulli(cfg.noise)) ir.record.label = 1 - ir.record.label;
      out.push_back(std::move(ir));
    }
  }
  return out;
}

}  // namespace

ItemTask generate_item_task(const SyntheticConfig& config, const SyntheticCorpus& corpus) {
  config.validate();
  const Samplers samplers(config.n_cities);
  Rng rng(derive_seed(config.seed, 0x17e3ULL));
  ItemTask task;
  auto& cat = task.catalog;
  cat.item_city.assign(config.n_items + 1, 0);
  cat.appeal.assign(config.n_items + 1, 0.0);
  std::vector<std::vector<int>> items_by_city(config.n_cities + 1);
  for (int item = 1; item <= config.n_items; ++item) {
    // Every city owns at least one item; the rest follow city popularity.
    const int city = item <= config.n_cities ? item : samplers.city(rng);
    cat.item_city[item] = city;
    cat.appeal[item] = std::exp(rng.uniform(-1.5, 1.5));
    items_by_city[city].push_back(item);
  }
  task.train = item_split(config, corpus, cat, items_by_city, corpus.train, 0xa11ULL);
  task.valid = item_split(config, corpus, cat, items_by_city, corpus.valid, 0xa12ULL);
  task.test = item_split(config, corpus, cat, items_by_city, corpus.test, 0xa13ULL);
  return task;
}

}  // namespace dmsn
