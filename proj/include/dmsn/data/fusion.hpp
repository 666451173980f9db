#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dmsn/data/events.hpp"

namespace dmsn {

// Strategy I merges every stream into one global sequence; strategy II keeps
// the five streams apart and combines them after attention.
enum class FusionStrategy { global = 1, per_stream = 2 };

FusionStrategy parse_strategy(std::string_view text);

using StreamSet = std::array<std::vector<BehaviorEvent>, kNumProductTypes>;

// Time-ordered, front-padded sequence. Padded slots hold city 0, unit 0,
// tau 0 and mask 0.
struct FusedSequence {
  std::vector<int> city_ids;
  std::vector<int> action_units;
  std::vector<double> time_deltas;  // days, <= 0
  std::vector<std::int64_t> timestamps;
  std::vector<std::uint8_t> mask;

  std::size_t length() const noexcept { return mask.size(); }
  std::size_t unmasked_count() const noexcept;
};

StreamSet split_streams(std::span<const BehaviorEvent> events);

// tau_i = (t_i - query_ts) / 86400 days on unmasked positions, 0 elsewhere.
std::vector<double> compute_time_deltas(std::span<const std::int64_t> timestamps,
                                        std::span<const std::uint8_t> mask, std::int64_t query_ts);

// Single unmasked event (city 0, sentinel action unit, tau 0) standing in
// for an empty stream, at position 0 with the rest masked.
FusedSequence placeholder_sequence(std::int64_t query_ts, std::size_t max_len);

// Strategy I. Throws ValidationError when all streams are empty.
FusedSequence fuse_global(const StreamSet& streams, std::int64_t query_ts, std::size_t max_len);

// Strategy II. An empty stream yields a single placeholder event.
std::vector<FusedSequence> fuse_per_stream(const StreamSet& streams, std::int64_t query_ts,
                                           std::size_t max_len);

std::vector<FusedSequence> fuse_sequences(const StreamSet& streams, std::int64_t query_ts,
                                          FusionStrategy strategy, std::size_t max_len);

}  // namespace dmsn
