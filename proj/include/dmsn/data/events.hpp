#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace dmsn {

// Product streams in their fixed fusion tie-break order.
enum class ProductType : std::uint8_t { train = 0, flight = 1, hotel = 2, item = 3, search = 4 };
enum class ActionType : std::uint8_t { click = 0, purchase = 1, collect = 2 };

inline constexpr int kNumProductTypes = 5;
inline constexpr int kNumActionTypes = 3;
inline constexpr int kNumActionUnits = kNumProductTypes * kNumActionTypes;  // 15
// Action unit carried by the strategy-II placeholder event of an empty stream.
inline constexpr int kSentinelActionUnit = 15;
inline constexpr int kActionTableRows = 16;
// City id 0 is reserved for padding and placeholder events; real cities are 1..n.
inline constexpr int kPaddingCity = 0;

inline constexpr std::array<std::string_view, kNumProductTypes> kProductNames = {
    "train", "flight", "hotel", "item", "search"};
inline constexpr std::array<std::string_view, kNumActionTypes> kActionNames = {
    "click", "purchase", "collect"};

ProductType parse_product(std::string_view name);
ActionType parse_action(std::string_view name);
inline std::string_view to_string(ProductType p) { return kProductNames[static_cast<int>(p)]; }
inline std::string_view to_string(ActionType a) { return kActionNames[static_cast<int>(a)]; }

constexpr int encode_action_unit(ProductType product, ActionType action) {
  return static_cast<int>(product) * kNumActionTypes + static_cast<int>(action);
}
std::pair<ProductType, ActionType> decode_action_unit(int unit);

struct BehaviorEvent {
  std::int64_t timestamp = 0;
  int city = 0;
  ProductType product = ProductType::train;
  ActionType action = ActionType::click;

  friend bool operator==(const BehaviorEvent&, const BehaviorEvent&) = default;
};

struct UserFeatures {
  int age_bucket = 0;
  int gender = 0;
  int purchase_level = 0;
  friend bool operator==(const UserFeatures&, const UserFeatures&) = default;
};

struct StatusFeatures {
  int trip_status = 0;
  int days_to_departure_bucket = 0;
  int month = 1;
  int season = 0;
  int hour = 0;
  friend bool operator==(const StatusFeatures&, const StatusFeatures&) = default;
};

// Vocabulary sizes for the fixed categorical feature schema.
inline constexpr std::array<int, 3> kUserFeatureVocab = {8, 3, 5};
inline constexpr std::array<int, 5> kStatusFeatureVocab = {4, 8, 13, 4, 24};

inline std::array<int, 3> feature_ids(const UserFeatures& u) {
  return {u.age_bucket, u.gender, u.purchase_level};
}
inline std::array<int, 5> feature_ids(const StatusFeatures& s) {
  return {s.trip_status, s.days_to_departure_bucket, s.month, s.season, s.hour};
}

struct SampleRecord {
  std::int64_t user_id = 0;
  UserFeatures user;
  StatusFeatures status;
  std::vector<BehaviorEvent> events;
  int candidate_city = 1;
  int label = 0;
  std::int64_t query_ts = 0;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct Vocabulary {
  int n_cities = 200;
};

// Throws ValidationError describing the first violated invariant.
void validate_record(const SampleRecord& record, const Vocabulary& vocab);

}  // namespace dmsn
