#include "dmsn/data/dataset_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dmsn/error.hpp"

namespace dmsn {

using ordered_json = nlohmann::ordered_json;

namespace {

void expect_keys(const nlohmann::json& obj, std::initializer_list<const char*> keys, const char* what) {
  if (!obj.is_object()) throw ValidationError(std::string(what) + " must be an object");
  if (obj.size() != keys.size()) {
    throw ValidationError(std::string(what) + " has " + std::to_string(obj.size()) + " fields, expected " +
                          std::to_string(keys.size()));
  }
  for (const char* k : keys) {
    if (!obj.contains(k)) throw ValidationError(std::string(what) + " is missing field '" + k + "'");
  }
}

template <typename T>
T get_integer(const nlohmann::json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ValidationError(std::string("field '") + key + "' must be an integer");
  return v.get<T>();
}

}  // namespace

std::string format_record(const SampleRecord& r) {
  ordered_json j;
  j["user_id"] = r.user_id;
  j["user_features"] = {{"age_bucket", r.user.age_bucket},
                        {"gender", r.user.gender},
                        {"purchase_level", r.user.purchase_level}};
  j["status_features"] = {{"trip_status", r.status.trip_status},
                          {"days_to_departure_bucket", r.status.days_to_departure_bucket},
                          {"month", r.status.month},
                          {"season", r.status.season},
                          {"hour", r.status.hour}};
  ordered_json events = ordered_json::array();
  for (const auto& e : r.events) {
    ordered_json ev;
    ev["ts"] = e.timestamp;
    ev["city"] = e.city;
    ev["product"] = std::string(to_string(e.product));
    ev["action"] = std::string(to_string(e.action));
    events.push_back(std::move(ev));
  }
  j["events"] = std::move(events);
  j["candidate_city"] = r.candidate_city;
  j["label"] = r.label;
  j["query_ts"] = r.query_ts;
  return j.dump();
}

SampleRecord parse_record(std::string_view line, const Vocabulary& vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed record: ") + e.what());
  }
  expect_keys(j,
              {"user_id", "user_features", "status_features", "events", "candidate_city", "label", "query_ts"},
              "record");
  SampleRecord r;
  r.user_id = get_integer<std::int64_t>(j, "user_id");
  const auto& u = j.at("user_features");
  expect_keys(u, {"age_bucket", "gender", "purchase_level"}, "user_features");
  r.user = {get_integer<int>(u, "age_bucket"), get_integer<int>(u, "gender"), get_integer<int>(u, "purchase_level")};
  const auto& s = j.at("status_features");
  expect_keys(s, {"trip_status", "days_to_departure_bucket", "month", "season", "hour"}, "status_features");
  r.status = {get_integer<int>(s, "trip_status"), get_integer<int>(s, "days_to_departure_bucket"),
              get_integer<int>(s, "month"), get_integer<int>(s, "season"), get_integer<int>(s, "hour")};
  const auto& events = j.at("events");
  if (!events.is_array()) throw ValidationError("field 'events' must be an array");
  r.events.reserve(events.size());
  for (const auto& ev : events) {
    expect_keys(ev, {"ts", "city", "product", "action"}, "event");
    if (!ev.at("product").is_string() || !ev.at("action").is_string()) {
      throw ValidationError("event product/action must be strings");
    }
    r.events.push_back({get_integer<std::int64_t>(ev, "ts"), get_integer<int>(ev, "city"),
                        parse_product(ev.at("product").get<std::string>()),
                        parse_action(ev.at("action").get<std::string>())});
  }
  r.candidate_city = get_integer<int>(j, "candidate_city");
  r.label = get_integer<int>(j, "label");
  r.query_ts = get_integer<std::int64_t>(j, "query_ts");
  validate_record(r, vocab);
  return r;
}

std::vector<SampleRecord> load_dataset(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path.string() + "'");
  std::vector<SampleRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(parse_record(line, vocab));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_dataset(std::ostream& out, const std::vector<SampleRecord>& records) {
  for (const auto& r : records) out << format_record(r) << '\n';
}

void write_dataset(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write dataset '" + path.string() + "'");
  write_dataset(out, records);
}

void write_intent_table(const std::filesystem::path& path, const IntentTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write intent table '" + path.string() + "'");
  for (const auto& [user, city] : table) out << user << '\t' << city << '\n';
}

IntentTable load_intent_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open intent table '" + path.string() + "'");
  IntentTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::int64_t user = 0;
    int city = 0;
    char tab = 0;
    if (!(is >> user) || !is.get(tab) || tab != '\t' || !(is >> city)) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected user_id<TAB>intent_city");
    }
    table.emplace_back(user, city);
  }
  return table;
}

}  // namespace dmsn
