#pragma once

#include <filesystem>
#include <iosfwd>

#include "dmsn/model/params.hpp"

namespace dmsn {

// Binary layout, all integers little-endian:
//   "DMSNCKPT" | u32 version | u32 n, n bytes of VariantSpec key=value text |
//   u32 tensor count | per tensor: u32 n, name | u32 rank | u64 extents | f64 data
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ModelParams& params);
void write_checkpoint(const std::filesystem::path& path, const ModelParams& params);

// Validates every tensor's name and shape against the stored spec.
ModelParams read_checkpoint(std::istream& in);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace dmsn
