#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dmsn/data/events.hpp"
#include "dmsn/data/fusion.hpp"
#include "dmsn/model/layers.hpp"
#include "dmsn/model/params.hpp"
#include "dmsn/model/variant.hpp"

namespace dmsn {

// Everything one forward pass consumes: fused sequence(s) plus the
// categorical context and the candidate id.
struct ModelInput {
  UserFeatures user;
  StatusFeatures status;
  std::vector<FusedSequence> sequences;  // 1 (strategy I) or 5 (strategy II)
  int candidate = 1;
};

// Fuses the record's events with the fusion strategy of `spec`. `candidate` overrides the
// record's candidate city (used for item candidates).
ModelInput make_input(const SampleRecord& record, const VariantSpec& spec);
ModelInput make_input(const SampleRecord& record, const VariantSpec& spec, int candidate);

// Attention weights of one (branch, grain) head over the unmasked events.
struct AttentionHead {
  int branch = 0;
  int grain = 0;
  std::vector<std::size_t> positions;  // index into the untrimmed sequence
  std::vector<int> cities;
  std::vector<int> action_units;
  std::vector<double> tau_days;
  std::vector<double> weights;
  Tensor states;                // attended columns, one per listed event
  std::vector<double> context;  // weighted sum of those columns
};

struct AttentionTrace {
  std::vector<AttentionHead> heads;
};

// Logistic loss with y_hat clamped to [1e-7, 1 - 1e-7].
double logistic_loss(int label, double y_hat);
inline constexpr double kProbabilityClamp = 1e-7;

class Network {
 public:
  explicit Network(VariantSpec spec);

  const VariantSpec& spec() const noexcept { return spec_; }

  ModelParams init_params(std::uint64_t seed) const;
  // Throws ValidationError if names or shapes differ from this spec's layout.
  void check_params(const ParamSet& params) const;

  // Preference score in (0,1).
  double predict(const ModelInput& input, const ParamSet& params, AttentionTrace* trace = nullptr) const;

  // Returns the loss and adds scale * dloss/dparams into grads.
  double loss_and_grad(const ModelInput& input, int label, const ParamSet& params, ParamSet& grads,
                       double scale = 1.0) const;

  // Indices of tensors whose row 0 is a frozen padding row.
  std::vector<std::size_t> padded_tables() const;

 private:
  struct BranchLayout {
    std::size_t gru_w = 0, gru_u = 0, gru_b = 0;
    std::vector<std::size_t> conv_kernel, conv_bias;
    std::size_t time_wb = 0;
    std::vector<std::size_t> attention_wa;
  };
  struct Layout {
    std::size_t city = 0, action = 0, candidate = 0;
    std::size_t user[3] = {};
    std::size_t status[5] = {};
    std::vector<BranchLayout> branches;
    std::vector<std::size_t> mlp_w, mlp_b;  // last entry is the output layer
  };
  struct BranchCache;
  struct Cache;

  double forward(const ModelInput& input, const ParamSet& params, Cache* cache, AttentionTrace* trace) const;
  void backward(const ModelInput& input, const ParamSet& params, const Cache& cache, double d_logit,
                ParamSet& grads) const;

  VariantSpec spec_;
  Layout layout_;
  ParamSet shapes_;  // zero tensors defining the expected layout
  std::vector<int> inits_;
  std::vector<std::pair<double, double>> fans_;
};

}  // namespace dmsn
