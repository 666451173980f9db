#include "dmsn/data/fusion.hpp"

#include <algorithm>
#include <string>

#include "dmsn/error.hpp"

namespace dmsn {

FusionStrategy parse_strategy(std::string_view text) {
  if (text == "1" || text == "I") return FusionStrategy::global;
  if (text == "2" || text == "II") return FusionStrategy::per_stream;
  throw std::invalid_argument("unknown fusion strategy '" + std::string(text) + "' (expected 1 or 2)");
}

std::size_t FusedSequence::unmasked_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

StreamSet split_streams(std::span<const BehaviorEvent> events) {
  StreamSet streams;
  for (const auto& e : events) streams[static_cast<int>(e.product)].push_back(e);
  return streams;
}

std::vector<double> compute_time_deltas(std::span<const std::int64_t> timestamps,
                                        std::span<const std::uint8_t> mask, std::int64_t query_ts) {
  std::vector<double> tau(timestamps.size(), 0.0);
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (mask[i]) tau[i] = static_cast<double>(timestamps[i] - query_ts) / 86400.0;
  }
  return tau;
}

namespace {

// Keeps the most recent max_len events of an already time-sorted list and
// front-pads to max_len.
FusedSequence pack(const std::vector<BehaviorEvent>& sorted, std::int64_t query_ts, std::size_t max_len) {
  FusedSequence seq;
  seq.city_ids.assign(max_len, kPaddingCity);
  seq.action_units.assign(max_len, 0);
  seq.timestamps.assign(max_len, 0);
  seq.mask.assign(max_len, 0);
  const std::size_t keep = std::min(max_len, sorted.size());
  const std::size_t src0 = sorted.size() - keep;
  const std::size_t dst0 = max_len - keep;
  for (std::size_t i = 0; i < keep; ++i) {
    const auto& e = sorted[src0 + i];
    seq.city_ids[dst0 + i] = e.city;
    seq.action_units[dst0 + i] = encode_action_unit(e.product, e.action);
    seq.timestamps[dst0 + i] = e.timestamp;
    seq.mask[dst0 + i] = 1;
  }
  seq.time_deltas = compute_time_deltas(seq.timestamps, seq.mask, query_ts);
  return seq;
}

std::vector<BehaviorEvent> time_sorted(std::vector<BehaviorEvent> events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const BehaviorEvent& a, const BehaviorEvent& b) { return a.timestamp < b.timestamp; });
  return events;
}

}  // namespace

FusedSequence placeholder_sequence(std::int64_t query_ts, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("max_len must be positive");
  FusedSequence seq = pack({}, query_ts, max_len);
  seq.mask[0] = 1;
  seq.action_units[0] = kSentinelActionUnit;
  seq.timestamps[0] = query_ts;
  return seq;
}

FusedSequence fuse_global(const StreamSet& streams, std::int64_t query_ts, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("max_len must be positive");
  std::vector<BehaviorEvent> merged;
  for (const auto& stream : streams) merged.insert(merged.end(), stream.begin(), stream.end());
  if (merged.empty()) throw ValidationError("no behavior events in any stream: nothing to fuse");
  return pack(time_sorted(std::move(merged)), query_ts, max_len);
}

std::vector<FusedSequence> fuse_per_stream(const StreamSet& streams, std::int64_t query_ts,
                                           std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("max_len must be positive");
  std::vector<FusedSequence> out;
  out.reserve(streams.size());
  for (const auto& stream : streams) {
    out.push_back(stream.empty() ? placeholder_sequence(query_ts, max_len)
                                 : pack(time_sorted(stream), query_ts, max_len));
  }
  return out;
}

std::vector<FusedSequence> fuse_sequences(const StreamSet& streams, std::int64_t query_ts,
                                          FusionStrategy strategy, std::size_t max_len) {
  if (strategy == FusionStrategy::global) return {fuse_global(streams, query_ts, max_len)};
  return fuse_per_stream(streams, query_ts, max_len);
}

}  // namespace dmsn
