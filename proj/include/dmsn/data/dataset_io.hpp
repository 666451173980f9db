#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dmsn/data/events.hpp"

namespace dmsn {

// One JSON object per line with keys in the canonical order
// user_id, user_features, status_features, events, candidate_city, label, query_ts.
std::string format_record(const SampleRecord& record);
SampleRecord parse_record(std::string_view line, const Vocabulary& vocab);

// Errors carry "path:line: reason".
std::vector<SampleRecord> load_dataset(const std::filesystem::path& path, const Vocabulary& vocab);
void write_dataset(const std::filesystem::path& path, const std::vector<SampleRecord>& records);
void write_dataset(std::ostream& out, const std::vector<SampleRecord>& records);

// Ground-truth table: "user_id<TAB>intent_city" per line.
using IntentTable = std::vector<std::pair<std::int64_t, int>>;
void write_intent_table(const std::filesystem::path& path, const IntentTable& table);
IntentTable load_intent_table(const std::filesystem::path& path);

}  // namespace dmsn
