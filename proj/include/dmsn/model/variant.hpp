#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dmsn/config_file.hpp"
#include "dmsn/data/fusion.hpp"
#include "dmsn/numerics/ops.hpp"

namespace dmsn {

// MLP: no encoder, masked-mean pooled embeddings.
// ATRNN: GRU encoder + status-aware attention.
// ATMC: multi-grained CNN + per-grain status-aware attention.
// MC: multi-grained CNN + masked-mean pooling per grain.
enum class VariantKind { mlp, atrnn, atmc, mc };

VariantKind parse_variant(std::string_view name);
std::string_view to_string(VariantKind kind);

inline constexpr std::uint8_t kAllStreams = 0x1f;

struct VariantSpec {
  VariantKind kind = VariantKind::atmc;
  FusionStrategy strategy = FusionStrategy::global;
  // Bit p set = product stream p feeds the model. Anything other than all
  // five streams turns an empty selection into a placeholder event.
  std::uint8_t streams = kAllStreams;
  int n_cities = 200;
  // 0: the candidate is a city and shares the city table; otherwise the
  // candidate comes from its own vocabulary of this size (e.g. items).
  int n_candidates = 0;
  int d_e = 16;
  int d_h = 16;
  int d_t = 8;
  int m = 16;
  std::vector<int> kernel_widths = {1, 3, 5, 7};
  std::vector<int> mlp_sizes = {256, 128, 64, 1};
  Activation activation = Activation::relu;
  std::size_t max_len = 50;

  void validate() const;

  bool has_attention() const { return kind == VariantKind::atrnn || kind == VariantKind::atmc; }
  bool uses_cnn() const { return kind == VariantKind::atmc || kind == VariantKind::mc; }
  int num_branches() const { return strategy == FusionStrategy::global ? 1 : 5; }
  int num_grains() const { return uses_cnn() ? static_cast<int>(kernel_widths.size()) : 1; }
  int embed_dim() const { return 2 * d_e; }
  int user_dim() const { return 3 * d_e; }
  int status_dim() const { return 5 * d_e; }
  // Dimension of the states one attention head pools over.
  int state_dim() const;
  // Width of one branch's sequence summary.
  int branch_dim() const { return num_grains() * state_dim(); }
  int mlp_input_dim() const { return user_dim() + status_dim() + num_branches() * branch_dim() + d_e; }

  // Keys match the train config file.
  void apply(const KeyValueConfig& kv);
  KeyValueConfig to_key_values() const;

  friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

// Keys VariantSpec::apply understands.
const std::vector<std::string_view>& variant_keys();

}  // namespace dmsn
