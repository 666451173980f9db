#include "dmsn/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "dmsn/error.hpp"
#include "dmsn/model/network.hpp"

namespace dmsn {

namespace {

constexpr char kMagic[8] = {'D', 'M', 'S', 'N', 'C', 'K', 'P', 'T'};

template <typename U>
void put(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U take(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw ValidationError("checkpoint truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& in, std::uint32_t limit) {
  const auto n = take<std::uint32_t>(in);
  if (n > limit) throw ValidationError("checkpoint string field too long");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw ValidationError("checkpoint truncated");
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, params.spec.to_key_values().to_text());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const Tensor& t = params.tensors[i];
    put_string(out, params.tensors.name(i));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put<std::uint64_t>(out, e);
    for (double v : t.values()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
}

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, params);
  if (!out) throw ValidationError("failed writing checkpoint '" + path.string() + "'");
}

ModelParams read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("not a DMSN checkpoint (bad magic)");
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelParams mp;
  try {
    mp.spec.apply(KeyValueConfig::parse(take_string(in, 1u << 16), "checkpoint header"));
    mp.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("checkpoint header: ") + e.what());
  }
  const auto count = take<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = take_string(in, 1024);
    const auto rank = take<std::uint32_t>(in);
    if (rank == 0 || rank > 4) throw ValidationError("tensor '" + name + "' has invalid rank");
    std::vector<std::size_t> shape(rank);
    std::uint64_t total = 1;
    for (auto& e : shape) {
      e = take<std::uint64_t>(in);
      if (e == 0 || e > (1u << 28)) throw ValidationError("tensor '" + name + "' has invalid extent");
      total *= e;
      if (total > (1ull << 30)) throw ValidationError("tensor '" + name + "' is too large");
    }
    std::vector<double> data(total);
    for (auto& v : data) v = std::bit_cast<double>(take<std::uint64_t>(in));
    mp.tensors.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  Network(mp.spec).check_params(mp.tensors);
  return mp;
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace dmsn
