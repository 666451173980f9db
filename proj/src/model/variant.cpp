#include "dmsn/model/variant.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace dmsn {

VariantKind parse_variant(std::string_view name) {
  if (name == "mlp") return VariantKind::mlp;
  if (name == "atrnn") return VariantKind::atrnn;
  if (name == "atmc") return VariantKind::atmc;
  if (name == "mc") return VariantKind::mc;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "' (expected mlp, atrnn, atmc or mc)");
}

std::string_view to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::mlp: return "mlp";
    case VariantKind::atrnn: return "atrnn";
    case VariantKind::atmc: return "atmc";
    case VariantKind::mc: return "mc";
  }
  return "?";
}

int VariantSpec::state_dim() const {
  switch (kind) {
    case VariantKind::mlp: return embed_dim();
    case VariantKind::atrnn: return d_h;
    case VariantKind::atmc:
    case VariantKind::mc: return m;
  }
  return 0;
}

void VariantSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("variant spec: " + msg); };
  if (n_cities <= 0) fail("n_cities must be positive");
  if (n_candidates < 0) fail("n_candidates must be nonnegative");
  if (d_e <= 0 || d_h <= 0 || d_t <= 0 || m <= 0) fail("dimensions must be positive");
  if (max_len == 0) fail("max_len must be positive");
  if ((streams & kAllStreams) == 0 || (streams & ~kAllStreams) != 0) fail("streams must select 1..5 product streams");
  if (strategy == FusionStrategy::per_stream && streams != kAllStreams) {
    fail("strategy 2 uses all five streams");
  }
  if (uses_cnn()) {
    if (kernel_widths.empty()) fail("at least one kernel width is required");
    std::set<int> seen;
    for (int k : kernel_widths) {
      if (k <= 0 || k % 2 == 0) fail("kernel widths must be odd and positive, got " + std::to_string(k));
      if (!seen.insert(k).second) fail("kernel widths must be distinct");
    }
  }
  if (mlp_sizes.empty() || mlp_sizes.back() != 1) fail("the last MLP size must be 1");
  for (int s : mlp_sizes) {
    if (s <= 0) fail("MLP sizes must be positive");
  }
}

const std::vector<std::string_view>& variant_keys() {
  static const std::vector<std::string_view> keys = {
      "variant", "strategy", "streams", "n_cities", "n_candidates", "d_e", "d_h", "d_t", "m",
      "kernel_widths", "mlp_sizes", "activation", "max_len"};
  return keys;
}

namespace {

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

void VariantSpec::apply(const KeyValueConfig& kv) {
  for (const auto& key : kv.keys()) {
    const auto& v = kv.get(key);
    if (key == "variant") kind = parse_variant(v);
    else if (key == "strategy") strategy = parse_strategy(v);
    else if (key == "streams") streams = static_cast<std::uint8_t>(parse_int(v, key));
    else if (key == "n_cities") n_cities = static_cast<int>(parse_int(v, key));
    else if (key == "n_candidates") n_candidates = static_cast<int>(parse_int(v, key));
    else if (key == "d_e") d_e = static_cast<int>(parse_int(v, key));
    else if (key == "d_h") d_h = static_cast<int>(parse_int(v, key));
    else if (key == "d_t") d_t = static_cast<int>(parse_int(v, key));
    else if (key == "m") m = static_cast<int>(parse_int(v, key));
    else if (key == "kernel_widths") kernel_widths = parse_int_list(v, key);
    else if (key == "mlp_sizes") mlp_sizes = parse_int_list(v, key);
    else if (key == "activation") activation = parse_activation(v);
    else if (key == "max_len") max_len = static_cast<std::size_t>(parse_int(v, key));
  }
}

KeyValueConfig VariantSpec::to_key_values() const {
  KeyValueConfig kv;
  kv.set("variant", std::string(to_string(kind)));
  kv.set("strategy", strategy == FusionStrategy::global ? "1" : "2");
  kv.set("streams", std::to_string(streams));
  kv.set("n_cities", std::to_string(n_cities));
  kv.set("n_candidates", std::to_string(n_candidates));
  kv.set("d_e", std::to_string(d_e));
  kv.set("d_h", std::to_string(d_h));
  kv.set("d_t", std::to_string(d_t));
  kv.set("m", std::to_string(m));
  kv.set("kernel_widths", join(kernel_widths));
  kv.set("mlp_sizes", join(mlp_sizes));
  kv.set("activation", std::string(to_string(activation)));
  kv.set("max_len", std::to_string(max_len));
  return kv;
}

}  // namespace dmsn
