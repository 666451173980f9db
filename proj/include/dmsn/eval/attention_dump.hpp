#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "dmsn/data/events.hpp"
#include "dmsn/model/network.hpp"
#include "dmsn/model/params.hpp"

namespace dmsn {

inline constexpr const char* kTraceHeader = "record_id,grain,position,city,action_unit,tau_days,weight";

// Weights rounded to 6 decimals so each head still sums to exactly 1.000000
// (largest-remainder rounding).
std::vector<long long> round_weights_to_micros(const std::vector<double>& weights);

// One row per (record, head, unmasked position). For strategy II the grain
// column numbers heads branch-major: branch * n_grains + grain.
void dump_attention(const ModelParams& params, const std::vector<SampleRecord>& records, std::ostream& out);
void dump_attention(const ModelParams& params, const std::vector<SampleRecord>& records,
                    const std::filesystem::path& path);

// Total weight a head puts on events of `city`.
double head_mass(const AttentionHead& head, int city);

}  // namespace dmsn
