#include "dmsn/data/events.hpp"

#include <string>

#include "dmsn/error.hpp"

namespace dmsn {

ProductType parse_product(std::string_view name) {
  for (int i = 0; i < kNumProductTypes; ++i) {
    if (kProductNames[i] == name) return static_cast<ProductType>(i);
  }
  throw ValidationError("unknown product type '" + std::string(name) + "'");
}

ActionType parse_action(std::string_view name) {
  for (int i = 0; i < kNumActionTypes; ++i) {
    if (kActionNames[i] == name) return static_cast<ActionType>(i);
  }
  throw ValidationError("unknown action type '" + std::string(name) + "'");
}

std::pair<ProductType, ActionType> decode_action_unit(int unit) {
  if (unit < 0 || unit >= kNumActionUnits) {
    throw std::out_of_range("action unit " + std::to_string(unit) + " outside [0,15)");
  }
  return {static_cast<ProductType>(unit / kNumActionTypes),
          static_cast<ActionType>(unit % kNumActionTypes)};
}

namespace {

void check_range(int value, int vocab, const char* what) {
  if (value < 0 || value >= vocab) {
    throw ValidationError(std::string(what) + " " + std::to_string(value) + " outside [0," +
                          std::to_string(vocab) + ")");
  }
}

}  // namespace

void validate_record(const SampleRecord& record, const Vocabulary& vocab) {
  static constexpr const char* kUserNames[] = {"age_bucket", "gender", "purchase_level"};
  static constexpr const char* kStatusNames[] = {"trip_status", "days_to_departure_bucket", "month",
                                                 "season", "hour"};
  const auto user = feature_ids(record.user);
  for (std::size_t i = 0; i < user.size(); ++i) check_range(user[i], kUserFeatureVocab[i], kUserNames[i]);
  const auto status = feature_ids(record.status);
  for (std::size_t i = 0; i < status.size(); ++i) {
    check_range(status[i], kStatusFeatureVocab[i], kStatusNames[i]);
  }
  if (record.label != 0 && record.label != 1) {
    throw ValidationError("label must be 0 or 1, got " + std::to_string(record.label));
  }
  if (record.candidate_city < 1 || record.candidate_city > vocab.n_cities) {
    throw ValidationError("candidate_city " + std::to_string(record.candidate_city) +
                          " outside vocabulary [1," + std::to_string(vocab.n_cities) + "]");
  }
  if (record.query_ts <= 0) throw ValidationError("query_ts must be positive");
  if (record.events.empty()) throw ValidationError("record has no events");
  for (const auto& e : record.events) {
    if (e.timestamp <= 0) throw ValidationError("event timestamp must be positive");
    if (e.timestamp > record.query_ts) {
      throw ValidationError("event timestamp " + std::to_string(e.timestamp) + " is after query_ts " +
                            std::to_string(record.query_ts));
    }
    if (e.city < 1 || e.city > vocab.n_cities) {
      throw ValidationError("event city " + std::to_string(e.city) + " outside vocabulary [1," +
                            std::to_string(vocab.n_cities) + "]");
    }
    if (static_cast<int>(e.product) >= kNumProductTypes || static_cast<int>(e.action) >= kNumActionTypes) {
      throw ValidationError("event enum out of range");
    }
  }
}

}  // namespace dmsn
