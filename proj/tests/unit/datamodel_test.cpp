#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dmsn/data/dataset_io.hpp"
#include "dmsn/data/fusion.hpp"
#include "dmsn/data/synthetic.hpp"
#include "dmsn/error.hpp"
#include "dmsn/eval/auc.hpp"
#include "dmsn/random.hpp"
#include "oracles.hpp"

using namespace dmsn;
namespace fs = std::filesystem;

namespace {

BehaviorEvent ev(std::int64_t ts, int city, ProductType p, ActionType a = ActionType::click) {
  return {ts, city, p, a};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dmsn_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SampleRecord small_record() {
  SampleRecord r;
  r.user_id = 17;
  r.user = {2, 1, 4};
  r.status = {3, 7, 12, 3, 23};
  r.query_ts = 1575200000;
  r.events = {ev(1575100000, 5, ProductType::hotel, ActionType::collect), ev(1575000000, 9, ProductType::search)};
  r.candidate_city = 5;
  r.label = 1;
  return r;
}

}  // namespace

TEST_CASE("action unit encoding") {
  CHECK(encode_action_unit(ProductType::train, ActionType::click) == 0);
  CHECK(encode_action_unit(ProductType::search, ActionType::collect) == 14);
  std::set<int> seen;
  for (int p = 0; p < kNumProductTypes; ++p)
    for (int a = 0; a < kNumActionTypes; ++a) {
      const int u = encode_action_unit(static_cast<ProductType>(p), static_cast<ActionType>(a));
      seen.insert(u);
      const auto [dp, da] = decode_action_unit(u);
      CHECK(static_cast<int>(dp) == p);
      CHECK(static_cast<int>(da) == a);
    }
  CHECK(seen.size() == 15);
  CHECK(*seen.rbegin() < kSentinelActionUnit);
  CHECK_THROWS(decode_action_unit(15));
  CHECK_THROWS(parse_product("cruise"));
}

TEST_CASE("fusion merges streams in time order") {
  const int city_a = 3, city_b = 4;
  StreamSet streams;
  streams[static_cast<int>(ProductType::train)] = {ev(10, city_a, ProductType::train)};
  streams[static_cast<int>(ProductType::hotel)] = {ev(5, city_b, ProductType::hotel)};
  const FusedSequence s = fuse_global(streams, 100, 4);
  CHECK(s.length() == 4);
  CHECK(s.mask == std::vector<std::uint8_t>{0, 0, 1, 1});
  CHECK(s.city_ids == std::vector<int>{0, 0, city_b, city_a});
  CHECK(s.action_units[2] == encode_action_unit(ProductType::hotel, ActionType::click));
}

TEST_CASE("fusion keeps the most recent max_len events") {
  std::vector<BehaviorEvent> events;
  for (int i = 0; i < 130; ++i) events.push_back(ev(1000 + i, 1 + i % 50, static_cast<ProductType>(i % 5)));
  Rng rng(1);
  rng.shuffle(events);
  const FusedSequence s = fuse_global(split_streams(events), 5000, 100);
  CHECK(s.unmasked_count() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(s.timestamps[i] == 1030 + static_cast<std::int64_t>(i));
}

TEST_CASE("fusion tie-break follows stream order") {
  StreamSet streams;
  streams[4] = {ev(50, 7, ProductType::search)};
  streams[0] = {ev(50, 8, ProductType::train)};
  const FusedSequence s = fuse_global(streams, 100, 3);
  CHECK(s.city_ids == std::vector<int>{0, 8, 7});
}

TEST_CASE("strategy II placeholder for empty streams") {
  StreamSet streams;
  streams[0] = {ev(10, 3, ProductType::train)};
  const auto seqs = fuse_per_stream(streams, 100, 6);
  REQUIRE(seqs.size() == 5);
  const FusedSequence& search = seqs[4];
  CHECK(search.mask == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0});
  CHECK(search.city_ids[0] == kPaddingCity);
  CHECK(search.action_units[0] == kSentinelActionUnit);
  CHECK(search.time_deltas[0] == 0.0);
  CHECK(seqs[0].unmasked_count() == 1);
  CHECK(seqs[0].city_ids.back() == 3);
  CHECK_THROWS_AS(fuse_global(StreamSet{}, 100, 6), ValidationError);
}

TEST_CASE("fused sequence invariants on random streams") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BehaviorEvent> events;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i)
      events.push_back(ev(1000 + static_cast<std::int64_t>(rng.below(500)), 1 + static_cast<int>(rng.below(20)),
                          static_cast<ProductType>(rng.below(5)), static_cast<ActionType>(rng.below(3))));
    const std::size_t max_len = 1 + rng.below(30);
    for (auto strategy : {FusionStrategy::global, FusionStrategy::per_stream}) {
      for (const auto& s : fuse_sequences(split_streams(events), 2000, strategy, max_len)) {
        CHECK(s.length() == max_len);
        CHECK(s.unmasked_count() >= 1);
        if (s.action_units[0] == kSentinelActionUnit && s.mask[0]) continue;
        bool seen_unmasked = false;
        for (std::size_t i = 0; i < s.length(); ++i) {
          if (!s.mask[i]) {
            CHECK_FALSE(seen_unmasked);  // padding only at the front
            CHECK(s.city_ids[i] == 0);
            CHECK(s.time_deltas[i] == 0.0);
            continue;
          }
          if (seen_unmasked) CHECK(s.timestamps[i - 1] <= s.timestamps[i]);
          seen_unmasked = true;
          CHECK(s.time_deltas[i] <= 0.0);
        }
      }
    }
  }
}

TEST_CASE("time deltas in days") {
  const std::int64_t q = 1575200000;
  const std::int64_t ts[] = {q, q - 86400, q - 3600, 0};
  const std::uint8_t mask[] = {1, 1, 1, 0};
  const auto tau = compute_time_deltas(ts, mask, q);
  CHECK(tau[0] == 0.0);
  CHECK(tau[1] == -1.0);
  CHECK(tau[2] == doctest::Approx(-0.0416667).epsilon(1e-6));
  CHECK(tau[3] == 0.0);
}

TEST_CASE("record validation") {
  const Vocabulary vocab{20};
  CHECK_NOTHROW(validate_record(small_record(), vocab));
  auto bad = small_record();
  bad.events[0].city = 21;
  CHECK_THROWS_AS(validate_record(bad, vocab), ValidationError);
  bad = small_record();
  bad.events[0].timestamp = bad.query_ts + 1;
  CHECK_THROWS_AS(validate_record(bad, vocab), ValidationError);
  bad = small_record();
  bad.label = 2;
  CHECK_THROWS_AS(validate_record(bad, vocab), ValidationError);
  bad = small_record();
  bad.events.clear();
  CHECK_THROWS_AS(validate_record(bad, vocab), ValidationError);
  bad = small_record();
  bad.candidate_city = 0;
  CHECK_THROWS_AS(validate_record(bad, vocab), ValidationError);
  bad = small_record();
  bad.status.hour = 24;
  CHECK_THROWS_AS(validate_record(bad, vocab), ValidationError);
}

TEST_CASE("dataset io") {
  const fs::path dir = scratch_dir("io");
  const Vocabulary vocab{20};
  {
    std::ofstream(dir / "empty.jsonl");
  }
  CHECK(load_dataset(dir / "empty.jsonl", vocab).empty());

  write_dataset(dir / "one.jsonl", {small_record()});
  const auto loaded = load_dataset(dir / "one.jsonl", vocab);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0] == small_record());

  {
    std::ofstream out(dir / "bad.jsonl");
    out << format_record(small_record()) << "\n" << "{\"user_id\": 3}\n";
  }
  try {
    load_dataset(dir / "bad.jsonl", vocab);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_record("not json", vocab), ValidationError);
  std::string extra = format_record(small_record());
  extra.insert(extra.size() - 1, ",\"extra\":1");
  CHECK_THROWS_AS(parse_record(extra, vocab), ValidationError);
}

TEST_CASE("synthetic corpus round-trips byte-identically") {
  SyntheticConfig cfg;
  cfg.n_users = 300;
  cfg.n_cities = 60;
  cfg.seed = 5;
  const fs::path a = scratch_dir("gen_a"), b = scratch_dir("gen_b");
  write_corpus(a, generate_synthetic(cfg));
  write_corpus(b, generate_synthetic(cfg));
  const Vocabulary vocab{cfg.n_cities};
  for (const char* name : {"train.jsonl", "valid.jsonl", "test.jsonl", "intent.tsv"}) {
    CHECK(slurp(a / name) == slurp(b / name));
  }
  for (const char* name : {"train.jsonl", "valid.jsonl", "test.jsonl"}) {
    const auto records = load_dataset(a / name, vocab);
    std::ostringstream again;
    write_dataset(again, records);
    CHECK(again.str() == slurp(a / name));
  }
  const auto table = load_intent_table(a / "intent.tsv");
  CHECK(table.size() == 300);

  cfg.seed = 6;
  const fs::path c = scratch_dir("gen_c");
  write_corpus(c, generate_synthetic(cfg));
  CHECK(slurp(a / "train.jsonl") != slurp(c / "train.jsonl"));
}

TEST_CASE("synthetic corpus structure") {
  SyntheticConfig cfg;
  cfg.n_users = 400;
  cfg.n_cities = 80;
  const auto corpus = generate_synthetic(cfg);
  const Vocabulary vocab{cfg.n_cities};
  std::set<std::int64_t> train_users, test_users;
  std::size_t positives = 0, total = 0;
  for (const auto* split : {&corpus.train, &corpus.valid, &corpus.test}) {
    for (const auto& r : *split) {
      CHECK_NOTHROW(validate_record(r, vocab));
      positives += r.label;
      ++total;
    }
  }
  for (const auto& r : corpus.train) train_users.insert(r.user_id);
  for (const auto& r : corpus.test) test_users.insert(r.user_id);
  for (auto u : test_users) CHECK(train_users.count(u) == 0);
  CHECK(total == static_cast<std::size_t>(cfg.n_users * (1 + cfg.neg_ratio)));
  // Expected positive rate with label noise: (1-n)/(1+k) + n*k/(1+k).
  const double expected = (1 - cfg.noise) / (1 + cfg.neg_ratio) + cfg.noise * cfg.neg_ratio / (1 + cfg.neg_ratio);
  CHECK(std::abs(static_cast<double>(positives) / static_cast<double>(total) - expected) < 0.02);
  for (const auto& t : corpus.truth) CHECK(t.intent_city != t.home_city);
}

TEST_CASE("noise-free corpus has exactly one positive per user") {
  SyntheticConfig cfg;
  cfg.n_users = 2000;
  cfg.noise = 0.0;
  const auto corpus = generate_synthetic(cfg);
  std::size_t positives = 0, total = 0;
  for (const auto* split : {&corpus.train, &corpus.valid, &corpus.test}) {
    for (const auto& r : *split) {
      positives += r.label;
      ++total;
    }
  }
  CHECK(total >= 10000);
  CHECK(static_cast<double>(positives) / static_cast<double>(total) == doctest::Approx(1.0 / (1 + cfg.neg_ratio)));
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig cfg;
  cfg.signal = 1.5;
  CHECK_THROWS(cfg.validate());
  CHECK_THROWS(SyntheticConfig::from_key_values(KeyValueConfig::parse("n_userz = 3")));
  const auto parsed = SyntheticConfig::from_key_values(KeyValueConfig::parse("n_users = 12\nsignal = 0.3\n"));
  CHECK(parsed.n_users == 12);
  CHECK(parsed.signal == 0.3);
}

TEST_CASE("bayes oracle separates a clean corpus and is blind without signal") {
  SyntheticConfig cfg;
  cfg.n_users = 2000;
  cfg.signal = 1.0;
  cfg.noise = 0.0;
  auto score = [](const std::vector<SampleRecord>& records) {
    std::vector<double> s;
    std::vector<int> y;
    for (const auto& r : records) {
      s.push_back(oracle::bayes_score(r));
      y.push_back(r.label);
    }
    return auc(s, y);
  };
  CHECK(score(generate_synthetic(cfg).test) == 1.0);
  cfg.signal = 0.0;
  CHECK(std::abs(score(generate_synthetic(cfg).test) - 0.5) <= 0.02);
}

TEST_CASE("item task") {
  SyntheticConfig cfg;
  cfg.n_users = 300;
  cfg.n_cities = 50;
  cfg.n_items = 120;
  const auto corpus = generate_synthetic(cfg);
  const auto task = generate_item_task(cfg, corpus);
  CHECK(task.catalog.n_items() == 120);
  std::set<int> cities_with_items(task.catalog.item_city.begin() + 1, task.catalog.item_city.end());
  CHECK(cities_with_items.size() == 50);
  for (const auto* split : {&task.train, &task.valid, &task.test}) {
    for (const auto& ir : *split) {
      CHECK(ir.item >= 1);
      CHECK(ir.item <= 120);
      CHECK(ir.record.candidate_city == task.catalog.item_city[static_cast<std::size_t>(ir.item)]);
    }
  }
}

TEST_CASE("key value config") {
  const auto kv = KeyValueConfig::parse("# comment\n a = 1 \n\nb=x,y\n");
  CHECK(kv.get("a") == "1");
  CHECK(kv.get("b") == "x,y");
  CHECK(kv.keys() == std::vector<std::string>{"a", "b"});
  CHECK_THROWS(KeyValueConfig::parse("a=1\na=2"));
  CHECK_THROWS(KeyValueConfig::parse("novalue"));
  CHECK_THROWS(kv.reject_unknown({"a"}));
  CHECK(parse_int_list("1,3,5", "k") == std::vector<int>{1, 3, 5});
  CHECK_THROWS(parse_int("1.5", "k"));
  CHECK(KeyValueConfig::parse(kv.to_text()).get("b") == "x,y");
}
