#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dmsn/data/fusion.hpp"
#include "dmsn/numerics/ops.hpp"
#include "dmsn/numerics/tensor.hpp"

// Forward/backward pairs for every DMSN layer. Backward functions accumulate
// into the gradient tensors they receive.
namespace dmsn::layers {

using Mask = std::span<const std::uint8_t>;

// Drops leading and trailing masked positions. Every layer below treats
// masked positions as absent, so this never changes a result.
FusedSequence trim_padding(const FusedSequence& seq);

// Column i = [city_table[city_i]; action_table[unit_i]], zero when masked.
Tensor embed(const FusedSequence& seq, const Tensor& city_table, const Tensor& action_table);
// City row 0 is the frozen padding row and never receives gradient.
void embed_backward(const FusedSequence& seq, const Tensor& d_x, Tensor& d_city, Tensor& d_action);

// GRU over the columns of x [d_in x L]. Parameters are stacked by gate
// (update, reset, candidate): w [3h x d_in], u [3h x h], b [3h]. Masked
// steps copy the previous state.
struct GruCache {
  Tensor z, r, cand, h;  // [L x h], one row per step
};
Tensor gru_forward(const Tensor& x, Mask mask, const Tensor& w, const Tensor& u, const Tensor& b,
                   GruCache* cache);
// Returns d_x.
Tensor gru_backward(const Tensor& x, Mask mask, const Tensor& w, const Tensor& u, const GruCache& cache,
                    const Tensor& d_h, Tensor& d_w, Tensor& d_u, Tensor& d_b);

// T[:, i] = tanh(w_b * log(1 + |tau_i|)), w_b [d_t x 1].
Tensor time_transform(std::span<const double> tau, const Tensor& w_b);
void time_transform_backward(std::span<const double> tau, const Tensor& t, const Tensor& d_t, Tensor& d_wb);

struct AttentionResult {
  Tensor context;  // [d_s]
  Tensor weights;  // [L]
  Tensor query;    // w_a^T x_o, [d_s + d_t]
};

// logit_i = x_o^T w_a [state_i; T_i]; weights = masked softmax; context =
// sum_i weight_i * state_i.
AttentionResult status_attention(const Tensor& x_o, const Tensor& states, const Tensor& t, Mask mask,
                                 const Tensor& w_a);
void status_attention_backward(const Tensor& x_o, const Tensor& states, const Tensor& t, Mask mask,
                               const Tensor& w_a, const AttentionResult& fwd, std::span<const double> d_context,
                               Tensor& d_xo, Tensor& d_states, Tensor& d_t, Tensor& d_wa);

// One same-padded convolution per grain followed by `act`; masked columns
// are zeroed on the way in and on the way out.
std::vector<Tensor> multigrained_conv(const Tensor& x, Mask mask, std::span<const Tensor* const> kernels,
                                      std::span<const Tensor* const> biases, Activation act);
// Backward for one grain given its output map. Accumulates into d_x.
void multigrained_conv_backward(const Tensor& x_masked, Mask mask, const Tensor& kernel, const Tensor& map,
                                Tensor d_map, Activation act, Tensor& d_x, Tensor& d_kernel, Tensor& d_bias);

Tensor zero_masked_columns(Tensor x, Mask mask);

// Applies status_attention to each map and concatenates the contexts.
struct GrainAttention {
  Tensor concatenated;
  std::vector<AttentionResult> grains;
};
GrainAttention atmc_attend(const std::vector<Tensor>& maps, const Tensor& x_o, const Tensor& t, Mask mask,
                           std::span<const Tensor* const> w_as);

Tensor masked_mean(const Tensor& states, Mask mask);
void masked_mean_backward(Mask mask, std::span<const double> d_out, Tensor& d_states);

// y = w x + b with w [out x in].
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b);
void dense_backward(const Tensor& x, const Tensor& w, std::span<const double> d_y, Tensor* d_x, Tensor& d_w,
                    Tensor& d_b);

}  // namespace dmsn::layers
