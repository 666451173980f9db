#include "dmsn/model/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmsn/error.hpp"
#include "dmsn/random.hpp"

namespace dmsn {

namespace L = layers;

ModelInput make_input(const SampleRecord& record, const VariantSpec& spec) {
  return make_input(record, spec, record.candidate_city);
}

ModelInput make_input(const SampleRecord& record, const VariantSpec& spec, int candidate) {
  ModelInput in;
  in.user = record.user;
  in.status = record.status;
  in.candidate = candidate;
  StreamSet streams = split_streams(record.events);
  if (spec.strategy == FusionStrategy::per_stream) {
    in.sequences = fuse_per_stream(streams, record.query_ts, spec.max_len);
    return in;
  }
  if (spec.streams == kAllStreams) {
    in.sequences = {fuse_global(streams, record.query_ts, spec.max_len)};
    return in;
  }
  bool any = false;
  for (int p = 0; p < kNumProductTypes; ++p) {
    if (!(spec.streams & (1u << p))) streams[p].clear();
    any = any || !streams[p].empty();
  }
  in.sequences = {any ? fuse_global(streams, record.query_ts, spec.max_len)
                      : placeholder_sequence(record.query_ts, spec.max_len)};
  return in;
}

double logistic_loss(int label, double y_hat) {
  const double p = std::clamp(y_hat, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label ? -std::log(p) : -std::log1p(-p);
}

namespace {

enum class Init { embedding, glorot, zero, time_scale };

struct ShapeBuilder {
  ParamSet& set;
  std::vector<Init>& inits;
  std::vector<std::pair<double, double>>& fans;

  std::size_t add(std::string name, std::vector<std::size_t> shape, Init init, double fan_in = 0,
                  double fan_out = 0) {
    inits.push_back(init);
    fans.emplace_back(fan_in, fan_out);
    return set.add(std::move(name), Tensor(std::move(shape)));
  }
};

constexpr const char* kUserNames[] = {"age_bucket", "gender", "purchase_level"};
constexpr const char* kStatusNames[] = {"trip_status", "days_to_departure_bucket", "month", "season", "hour"};

}  // namespace

struct Network::BranchCache {
  std::size_t offset = 0;
  FusedSequence seq;
  Tensor x;
  L::GruCache gru;
  std::vector<Tensor> states;  // one per grain (ATRNN: hidden states)
  Tensor t;
  std::vector<L::AttentionResult> attention;
  Tensor out;
};

struct Network::Cache {
  Tensor x_u, x_o, x_i;
  std::vector<BranchCache> branches;
  std::vector<Tensor> layer_in;   // input to every dense layer
  std::vector<Tensor> layer_out;  // activated output of hidden layers
  double logit = 0.0;
};

Network::Network(VariantSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::vector<Init> inits;
  ShapeBuilder b{shapes_, inits, fans_};
  const auto de = static_cast<std::size_t>(spec_.d_e);
  layout_.city = b.add("embed.city", {static_cast<std::size_t>(spec_.n_cities) + 1, de}, Init::embedding);
  layout_.action = b.add("embed.action", {kActionTableRows, de}, Init::embedding);
  for (int i = 0; i < 3; ++i) {
    layout_.user[i] = b.add(std::string("embed.user.") + kUserNames[i],
                            {static_cast<std::size_t>(kUserFeatureVocab[i]), de}, Init::embedding);
  }
  for (int i = 0; i < 5; ++i) {
    layout_.status[i] = b.add(std::string("embed.status.") + kStatusNames[i],
                              {static_cast<std::size_t>(kStatusFeatureVocab[i]), de}, Init::embedding);
  }
  layout_.candidate = layout_.city;
  if (spec_.n_candidates > 0) {
    layout_.candidate =
        b.add("embed.candidate", {static_cast<std::size_t>(spec_.n_candidates) + 1, de}, Init::embedding);
  }

  const auto d_in = static_cast<std::size_t>(spec_.embed_dim());
  const auto d_o = static_cast<std::size_t>(spec_.status_dim());
  const auto d_s = static_cast<std::size_t>(spec_.state_dim());
  const auto d_t = static_cast<std::size_t>(spec_.d_t);
  for (int br = 0; br < spec_.num_branches(); ++br) {
    const std::string p = "branch" + std::to_string(br) + ".";
    BranchLayout bl;
    if (spec_.kind == VariantKind::atrnn) {
      const auto h = static_cast<std::size_t>(spec_.d_h);
      bl.gru_w = b.add(p + "gru.W", {3 * h, d_in}, Init::glorot, double(d_in), double(h));
      bl.gru_u = b.add(p + "gru.U", {3 * h, h}, Init::glorot, double(h), double(h));
      bl.gru_b = b.add(p + "gru.b", {3 * h}, Init::zero);
    }
    if (spec_.uses_cnn()) {
      const auto m = static_cast<std::size_t>(spec_.m);
      for (int k : spec_.kernel_widths) {
        const auto kk = static_cast<std::size_t>(k);
        const std::string g = p + "conv_k" + std::to_string(k) + ".";
        bl.conv_kernel.push_back(
            b.add(g + "kernel", {m, d_in, kk}, Init::glorot, double(d_in * kk), double(m * kk)));
        bl.conv_bias.push_back(b.add(g + "bias", {m}, Init::zero));
      }
    }
    if (spec_.has_attention()) {
      bl.time_wb = b.add(p + "time.W_b", {d_t, 1}, Init::time_scale);
      for (int g = 0; g < spec_.num_grains(); ++g) {
        const std::string name =
            spec_.uses_cnn() ? p + "attention_k" + std::to_string(spec_.kernel_widths[g]) + ".W_a"
                             : p + "attention.W_a";
        bl.attention_wa.push_back(b.add(name, {d_o, d_s + d_t}, Init::glorot, double(d_o), double(d_s + d_t)));
      }
    }
    layout_.branches.push_back(std::move(bl));
  }

  std::size_t in = static_cast<std::size_t>(spec_.mlp_input_dim());
  for (std::size_t l = 0; l < spec_.mlp_sizes.size(); ++l) {
    const auto out = static_cast<std::size_t>(spec_.mlp_sizes[l]);
    const bool last = l + 1 == spec_.mlp_sizes.size();
    const std::string p = last ? std::string("output.") : "mlp" + std::to_string(l) + ".";
    layout_.mlp_w.push_back(b.add(p + (last ? "W_r" : "W"), {out, in}, Init::glorot, double(in), double(out)));
    layout_.mlp_b.push_back(b.add(p + "b", {out}, Init::zero));
    in = out;
  }
  for (Init i : inits) inits_.push_back(static_cast<int>(i));
}

ModelParams Network::init_params(std::uint64_t seed) const {
  ModelParams mp{spec_, shapes_};
  Rng rng(derive_seed(seed, 0x5eedULL));
  for (std::size_t i = 0; i < mp.tensors.size(); ++i) {
    Tensor& t = mp.tensors[i];
    double a = 0.0;
    switch (static_cast<Init>(inits_[i])) {
      case Init::embedding: a = 0.5; break;
      case Init::glorot: a = std::sqrt(6.0 / (fans_[i].first + fans_[i].second)); break;
      case Init::time_scale: a = 1.0; break;
      case Init::zero: a = 0.0; break;
    }
    if (a == 0.0) continue;
    for (auto& v : t.values()) v = rng.uniform(-a, a);
  }
  for (std::size_t idx : padded_tables()) {
    Tensor& t = mp.tensors[idx];
    std::fill(t.row(0), t.row(0) + t.cols(), 0.0);
  }
  return mp;
}

std::vector<std::size_t> Network::padded_tables() const {
  if (layout_.candidate != layout_.city) return {layout_.city, layout_.candidate};
  return {layout_.city};
}

void Network::check_params(const ParamSet& params) const {
  if (params.size() != shapes_.size()) {
    throw ValidationError("parameter count " + std::to_string(params.size()) + " differs from the " +
                          std::to_string(shapes_.size()) + " tensors this variant needs");
  }
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    if (params.name(i) != shapes_.name(i)) {
      throw ValidationError("parameter " + std::to_string(i) + " is '" + params.name(i) + "', expected '" +
                            shapes_.name(i) + "'");
    }
    if (!params[i].same_shape(shapes_[i])) {
      throw ValidationError("parameter '" + params.name(i) + "' has shape " + params[i].shape_string() +
                            ", expected " + shapes_[i].shape_string());
    }
  }
}

namespace {

void check_row(const Tensor& table, int id, const char* what) {
  if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
    throw ValidationError(std::string(what) + " id " + std::to_string(id) + " outside embedding table of " +
                          std::to_string(table.rows()) + " rows");
  }
}

void append_row(Tensor& dst, std::size_t& offset, const Tensor& table, int id) {
  const double* src = table.row(static_cast<std::size_t>(id));
  std::copy(src, src + table.cols(), dst.data() + offset);
  offset += table.cols();
}

void scatter_row(Tensor& d_table, int id, const double* grad) {
  double* dst = d_table.row(static_cast<std::size_t>(id));
  for (std::size_t k = 0; k < d_table.cols(); ++k) dst[k] += grad[k];
}

std::vector<const Tensor*> gather(const ParamSet& params, const std::vector<std::size_t>& idx) {
  std::vector<const Tensor*> out;
  for (auto i : idx) out.push_back(&params[i]);
  return out;
}

}  // namespace

double Network::forward(const ModelInput& input, const ParamSet& params, Cache* cache,
                        AttentionTrace* trace) const {
  if (static_cast<int>(input.sequences.size()) != spec_.num_branches()) {
    throw ValidationError("input has " + std::to_string(input.sequences.size()) + " sequences, variant expects " +
                          std::to_string(spec_.num_branches()));
  }
  const auto de = static_cast<std::size_t>(spec_.d_e);
  Cache local;
  Cache& c = cache ? *cache : local;

  const auto user_ids = feature_ids(input.user);
  const auto status_ids = feature_ids(input.status);
  c.x_u = Tensor({3 * de});
  c.x_o = Tensor({5 * de});
  std::size_t off = 0;
  for (int i = 0; i < 3; ++i) {
    check_row(params[layout_.user[i]], user_ids[i], kUserNames[i]);
    append_row(c.x_u, off, params[layout_.user[i]], user_ids[i]);
  }
  off = 0;
  for (int i = 0; i < 5; ++i) {
    check_row(params[layout_.status[i]], status_ids[i], kStatusNames[i]);
    append_row(c.x_o, off, params[layout_.status[i]], status_ids[i]);
  }
  check_row(params[layout_.candidate], input.candidate, "candidate");
  if (input.candidate == 0) throw ValidationError("candidate id 0 is reserved for padding");
  c.x_i = Tensor({de});
  off = 0;
  append_row(c.x_i, off, params[layout_.candidate], input.candidate);

  c.branches.assign(input.sequences.size(), {});
  for (std::size_t br = 0; br < input.sequences.size(); ++br) {
    const auto& bl = layout_.branches[br];
    auto& bc = c.branches[br];
    const auto& full = input.sequences[br];
    while (bc.offset < full.length() && !full.mask[bc.offset]) ++bc.offset;
    bc.seq = L::trim_padding(full);
    const L::Mask mask = bc.seq.mask;
    bc.x = L::embed(bc.seq, params[layout_.city], params[layout_.action]);
    switch (spec_.kind) {
      case VariantKind::mlp:
        bc.out = L::masked_mean(bc.x, mask);
        break;
      case VariantKind::atrnn: {
        bc.states = {L::gru_forward(bc.x, mask, params[bl.gru_w], params[bl.gru_u], params[bl.gru_b], &bc.gru)};
        bc.t = L::time_transform(bc.seq.time_deltas, params[bl.time_wb]);
        bc.attention = {L::status_attention(c.x_o, bc.states[0], bc.t, mask, params[bl.attention_wa[0]])};
        bc.out = bc.attention[0].context;
        break;
      }
      case VariantKind::atmc: {
        const auto kernels = gather(params, bl.conv_kernel);
        const auto biases = gather(params, bl.conv_bias);
        bc.states = L::multigrained_conv(bc.x, mask, kernels, biases, spec_.activation);
        bc.t = L::time_transform(bc.seq.time_deltas, params[bl.time_wb]);
        auto att = L::atmc_attend(bc.states, c.x_o, bc.t, mask, gather(params, bl.attention_wa));
        bc.attention = std::move(att.grains);
        bc.out = std::move(att.concatenated);
        break;
      }
      case VariantKind::mc: {
        const auto kernels = gather(params, bl.conv_kernel);
        const auto biases = gather(params, bl.conv_bias);
        bc.states = L::multigrained_conv(bc.x, mask, kernels, biases, spec_.activation);
        bc.out = Tensor({static_cast<std::size_t>(spec_.branch_dim())});
        std::size_t o = 0;
        for (const auto& map : bc.states) {
          const Tensor pooled = L::masked_mean(map, mask);
          std::copy(pooled.values().begin(), pooled.values().end(), bc.out.data() + o);
          o += pooled.size();
        }
        break;
      }
    }
    if (trace && spec_.has_attention()) {
      for (std::size_t g = 0; g < bc.attention.size(); ++g) {
        AttentionHead head;
        head.branch = static_cast<int>(br);
        head.grain = static_cast<int>(g);
        const Tensor& st = bc.states[g];
        head.states = Tensor({st.rows(), bc.seq.unmasked_count()});
        const auto ctx = bc.attention[g].context.values();
        head.context.assign(ctx.begin(), ctx.end());
        for (std::size_t i = 0; i < bc.seq.length(); ++i) {
          if (!bc.seq.mask[i]) continue;
          for (std::size_t r = 0; r < st.rows(); ++r) head.states(r, head.weights.size()) = st(r, i);
          head.positions.push_back(bc.offset + i);
          head.cities.push_back(bc.seq.city_ids[i]);
          head.action_units.push_back(bc.seq.action_units[i]);
          head.tau_days.push_back(bc.seq.time_deltas[i]);
          head.weights.push_back(bc.attention[g].weights[i]);
        }
        trace->heads.push_back(std::move(head));
      }
    }
  }

  Tensor v({static_cast<std::size_t>(spec_.mlp_input_dim())});
  off = 0;
  auto put = [&](const Tensor& t) {
    std::copy(t.values().begin(), t.values().end(), v.data() + off);
    off += t.size();
  };
  put(c.x_u);
  put(c.x_o);
  for (const auto& bc : c.branches) put(bc.out);
  put(c.x_i);

  c.layer_in.clear();
  c.layer_out.clear();
  Tensor h = std::move(v);
  const std::size_t n_layers = layout_.mlp_w.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Tensor z = L::dense(h, params[layout_.mlp_w[l]], params[layout_.mlp_b[l]]);
    c.layer_in.push_back(std::move(h));
    if (l + 1 == n_layers) {
      c.logit = z[0];
      break;
    }
    for (auto& x : z.values()) x = activate(x, spec_.activation);
    c.layer_out.push_back(z);
    h = std::move(z);
  }
  return c.logit;
}

void Network::backward(const ModelInput& input, const ParamSet& params, const Cache& c, double d_logit,
                       ParamSet& grads) const {
  const std::size_t n_layers = layout_.mlp_w.size();
  Tensor d_h({1}, {d_logit});
  for (std::size_t l = n_layers; l-- > 0;) {
    const Tensor& x = c.layer_in[l];
    if (l + 1 < n_layers) {
      const Tensor& y = c.layer_out[l];
      for (std::size_t k = 0; k < d_h.size(); ++k) d_h[k] *= activation_grad_from_output(y[k], spec_.activation);
    }
    Tensor d_x = Tensor::zeros_like(x);
    L::dense_backward(x, params[layout_.mlp_w[l]], d_h.values(), &d_x, grads[layout_.mlp_w[l]],
                      grads[layout_.mlp_b[l]]);
    d_h = std::move(d_x);
  }
  const Tensor& d_v = d_h;
  const auto de = static_cast<std::size_t>(spec_.d_e);
  const double* dv = d_v.data();
  Tensor d_xo({5 * de});
  std::copy(dv + 3 * de, dv + 8 * de, d_xo.data());

  std::size_t off = 8 * de;
  for (std::size_t br = 0; br < c.branches.size(); ++br) {
    const auto& bl = layout_.branches[br];
    const auto& bc = c.branches[br];
    const L::Mask mask = bc.seq.mask;
    const std::span<const double> d_out(dv + off, bc.out.size());
    off += bc.out.size();
    Tensor d_x = Tensor::zeros_like(bc.x);
    switch (spec_.kind) {
      case VariantKind::mlp:
        L::masked_mean_backward(mask, d_out, d_x);
        break;
      case VariantKind::atrnn: {
        Tensor d_states = Tensor::zeros_like(bc.states[0]);
        Tensor d_t = Tensor::zeros_like(bc.t);
        const auto wa = bl.attention_wa[0];
        L::status_attention_backward(c.x_o, bc.states[0], bc.t, mask, params[wa], bc.attention[0], d_out, d_xo,
                                     d_states, d_t, grads[wa]);
        L::time_transform_backward(bc.seq.time_deltas, bc.t, d_t, grads[bl.time_wb]);
        d_x = L::gru_backward(bc.x, mask, params[bl.gru_w], params[bl.gru_u], bc.gru, d_states, grads[bl.gru_w],
                              grads[bl.gru_u], grads[bl.gru_b]);
        break;
      }
      case VariantKind::atmc: {
        Tensor d_t = Tensor::zeros_like(bc.t);
        std::size_t o = 0;
        for (std::size_t g = 0; g < bc.states.size(); ++g) {
          const auto& map = bc.states[g];
          Tensor d_map = Tensor::zeros_like(map);
          const auto wa = bl.attention_wa[g];
          L::status_attention_backward(c.x_o, map, bc.t, mask, params[wa], bc.attention[g],
                                       d_out.subspan(o, map.rows()), d_xo, d_map, d_t, grads[wa]);
          o += map.rows();
          L::multigrained_conv_backward(bc.x, mask, params[bl.conv_kernel[g]], map, std::move(d_map),
                                        spec_.activation, d_x, grads[bl.conv_kernel[g]], grads[bl.conv_bias[g]]);
        }
        L::time_transform_backward(bc.seq.time_deltas, bc.t, d_t, grads[bl.time_wb]);
        break;
      }
      case VariantKind::mc: {
        std::size_t o = 0;
        for (std::size_t g = 0; g < bc.states.size(); ++g) {
          const auto& map = bc.states[g];
          Tensor d_map = Tensor::zeros_like(map);
          L::masked_mean_backward(mask, d_out.subspan(o, map.rows()), d_map);
          o += map.rows();
          L::multigrained_conv_backward(bc.x, mask, params[bl.conv_kernel[g]], map, std::move(d_map),
                                        spec_.activation, d_x, grads[bl.conv_kernel[g]], grads[bl.conv_bias[g]]);
        }
        break;
      }
    }
    L::embed_backward(bc.seq, d_x, grads[layout_.city], grads[layout_.action]);
  }

  const auto user_ids = feature_ids(input.user);
  const auto status_ids = feature_ids(input.status);
  for (int i = 0; i < 3; ++i) scatter_row(grads[layout_.user[i]], user_ids[i], dv + i * de);
  for (int i = 0; i < 5; ++i) scatter_row(grads[layout_.status[i]], status_ids[i], d_xo.data() + i * de);
  scatter_row(grads[layout_.candidate], input.candidate, dv + off);
}

double Network::predict(const ModelInput& input, const ParamSet& params, AttentionTrace* trace) const {
  return sigmoid(forward(input, params, nullptr, trace));
}

double Network::loss_and_grad(const ModelInput& input, int label, const ParamSet& params, ParamSet& grads,
                              double scale) const {
  Cache cache;
  const double logit = forward(input, params, &cache, nullptr);
  const double y_hat = sigmoid(logit);
  // d loss / d logit of the unclamped logistic loss.
  backward(input, params, cache, scale * (y_hat - static_cast<double>(label)), grads);
  return logistic_loss(label, y_hat);
}

}  // namespace dmsn
