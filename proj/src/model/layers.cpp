#include "dmsn/model/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dmsn/error.hpp"

namespace dmsn::layers {

FusedSequence trim_padding(const FusedSequence& seq) {
  std::size_t lo = 0, hi = seq.length();
  while (lo < hi && !seq.mask[lo]) ++lo;
  while (hi > lo && !seq.mask[hi - 1]) --hi;
  if (lo == hi) throw ValidationError("sequence has no unmasked position");
  FusedSequence out;
  auto slice = [&](const auto& v) { return std::decay_t<decltype(v)>(v.begin() + lo, v.begin() + hi); };
  out.city_ids = slice(seq.city_ids);
  out.action_units = slice(seq.action_units);
  out.time_deltas = slice(seq.time_deltas);
  out.timestamps = slice(seq.timestamps);
  out.mask = slice(seq.mask);
  return out;
}

Tensor embed(const FusedSequence& seq, const Tensor& city_table, const Tensor& action_table) {
  const std::size_t d_e = city_table.cols();
  const std::size_t len = seq.length();
  Tensor x({2 * d_e, len});
  for (std::size_t i = 0; i < len; ++i) {
    if (!seq.mask[i]) continue;
    const int city = seq.city_ids[i];
    const int unit = seq.action_units[i];
    if (city < 0 || static_cast<std::size_t>(city) >= city_table.rows()) {
      throw ValidationError("city id " + std::to_string(city) + " outside embedding table");
    }
    if (unit < 0 || static_cast<std::size_t>(unit) >= action_table.rows()) {
      throw ValidationError("action unit " + std::to_string(unit) + " outside embedding table");
    }
    const double* c = city_table.row(static_cast<std::size_t>(city));
    const double* a = action_table.row(static_cast<std::size_t>(unit));
    for (std::size_t k = 0; k < d_e; ++k) {
      x(k, i) = c[k];
      x(d_e + k, i) = a[k];
    }
  }
  return x;
}

void embed_backward(const FusedSequence& seq, const Tensor& d_x, Tensor& d_city, Tensor& d_action) {
  const std::size_t d_e = d_city.cols();
  for (std::size_t i = 0; i < seq.length(); ++i) {
    if (!seq.mask[i]) continue;
    const int city = seq.city_ids[i];
    double* a = d_action.row(static_cast<std::size_t>(seq.action_units[i]));
    for (std::size_t k = 0; k < d_e; ++k) a[k] += d_x(d_e + k, i);
    if (city == kPaddingCity) continue;
    double* c = d_city.row(static_cast<std::size_t>(city));
    for (std::size_t k = 0; k < d_e; ++k) c[k] += d_x(k, i);
  }
}

Tensor gru_forward(const Tensor& x, Mask mask, const Tensor& w, const Tensor& u, const Tensor& b,
                   GruCache* cache) {
  const std::size_t d_in = x.rows(), len = x.cols(), h = u.cols();
  if (w.rows() != 3 * h || w.cols() != d_in || u.rows() != 3 * h || b.size() != 3 * h) {
    throw ShapeError("gru_forward: inconsistent parameter shapes");
  }
  Tensor z({len, h}), r({len, h}), cand({len, h}), hs({len, h});
  std::vector<double> prev(h, 0.0), pre(3 * h), rh(h);
  for (std::size_t i = 0; i < len; ++i) {
    double* out = hs.row(i);
    if (!mask[i]) {
      std::copy(prev.begin(), prev.end(), out);
      continue;
    }
    for (std::size_t j = 0; j < 3 * h; ++j) {
      const double* wr = w.row(j);
      double acc = b[j];
      for (std::size_t c = 0; c < d_in; ++c) acc += wr[c] * x(c, i);
      pre[j] = acc;
    }
    for (std::size_t j = 0; j < 2 * h; ++j) {
      const double* ur = u.row(j);
      double acc = 0.0;
      for (std::size_t c = 0; c < h; ++c) acc += ur[c] * prev[c];
      pre[j] += acc;
    }
    double* zi = z.row(i);
    double* ri = r.row(i);
    for (std::size_t j = 0; j < h; ++j) {
      zi[j] = sigmoid(pre[j]);
      ri[j] = sigmoid(pre[h + j]);
      rh[j] = ri[j] * prev[j];
    }
    double* ci = cand.row(i);
    for (std::size_t j = 0; j < h; ++j) {
      const double* ur = u.row(2 * h + j);
      double acc = pre[2 * h + j];
      for (std::size_t c = 0; c < h; ++c) acc += ur[c] * rh[c];
      ci[j] = std::tanh(acc);
    }
    for (std::size_t j = 0; j < h; ++j) out[j] = (1.0 - zi[j]) * prev[j] + zi[j] * ci[j];
    std::copy(out, out + h, prev.begin());
  }
  Tensor states({h, len});
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t j = 0; j < h; ++j) states(j, i) = hs(i, j);
  }
  if (cache) *cache = {std::move(z), std::move(r), std::move(cand), std::move(hs)};
  return states;
}

Tensor gru_backward(const Tensor& x, Mask mask, const Tensor& w, const Tensor& u, const GruCache& cache,
                    const Tensor& d_h, Tensor& d_w, Tensor& d_u, Tensor& d_b) {
  const std::size_t d_in = x.rows(), len = x.cols(), h = u.cols();
  Tensor d_x({d_in, len});
  std::vector<double> carry(h, 0.0), dh(h), d_pre(3 * h), d_rh(h), prev(h), rh(h);
  for (std::size_t step = len; step-- > 0;) {
    for (std::size_t j = 0; j < h; ++j) dh[j] = carry[j] + d_h(j, step);
    if (!mask[step]) {
      carry = dh;
      continue;
    }
    if (step > 0) {
      std::copy(cache.h.row(step - 1), cache.h.row(step - 1) + h, prev.begin());
    } else {
      std::fill(prev.begin(), prev.end(), 0.0);
    }
    const double* zi = cache.z.row(step);
    const double* ri = cache.r.row(step);
    const double* ci = cache.cand.row(step);
    for (std::size_t j = 0; j < h; ++j) {
      carry[j] = dh[j] * (1.0 - zi[j]);
      const double dz = dh[j] * (ci[j] - prev[j]);
      const double dc = dh[j] * zi[j];
      d_pre[j] = dz * zi[j] * (1.0 - zi[j]);
      d_pre[2 * h + j] = dc * (1.0 - ci[j] * ci[j]);
      rh[j] = ri[j] * prev[j];
    }
    // Candidate path through U_h (r * h_prev).
    std::fill(d_rh.begin(), d_rh.end(), 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      const double g = d_pre[2 * h + j];
      const double* ur = u.row(2 * h + j);
      double* dur = d_u.row(2 * h + j);
      for (std::size_t c = 0; c < h; ++c) {
        dur[c] += g * rh[c];
        d_rh[c] += ur[c] * g;
      }
    }
    for (std::size_t j = 0; j < h; ++j) {
      carry[j] += d_rh[j] * ri[j];
      const double dr = d_rh[j] * prev[j];
      d_pre[h + j] = dr * ri[j] * (1.0 - ri[j]);
    }
    for (std::size_t j = 0; j < 2 * h; ++j) {
      const double g = d_pre[j];
      const double* ur = u.row(j);
      double* dur = d_u.row(j);
      for (std::size_t c = 0; c < h; ++c) {
        dur[c] += g * prev[c];
        carry[c] += ur[c] * g;
      }
    }
    for (std::size_t j = 0; j < 3 * h; ++j) {
      const double g = d_pre[j];
      d_b[j] += g;
      const double* wr = w.row(j);
      double* dwr = d_w.row(j);
      for (std::size_t c = 0; c < d_in; ++c) {
        dwr[c] += g * x(c, step);
        d_x(c, step) += wr[c] * g;
      }
    }
  }
  return d_x;
}

Tensor time_transform(std::span<const double> tau, const Tensor& w_b) {
  const std::size_t d_t = w_b.rows(), len = tau.size();
  Tensor t({d_t, len});
  for (std::size_t i = 0; i < len; ++i) {
    const double s = std::log1p(std::abs(tau[i]));
    for (std::size_t j = 0; j < d_t; ++j) t(j, i) = std::tanh(w_b[j] * s);
  }
  return t;
}

void time_transform_backward(std::span<const double> tau, const Tensor& t, const Tensor& d_t, Tensor& d_wb) {
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double s = std::log1p(std::abs(tau[i]));
    for (std::size_t j = 0; j < t.rows(); ++j) d_wb[j] += d_t(j, i) * (1.0 - t(j, i) * t(j, i)) * s;
  }
}

AttentionResult status_attention(const Tensor& x_o, const Tensor& states, const Tensor& t, Mask mask,
                                 const Tensor& w_a) {
  const std::size_t d_o = x_o.size(), d_s = states.rows(), d_t = t.rows(), len = states.cols();
  if (w_a.rows() != d_o || w_a.cols() != d_s + d_t) {
    throw ShapeError("status_attention: W_a is " + w_a.shape_string() + ", expected [" + std::to_string(d_o) +
                     "x" + std::to_string(d_s + d_t) + "]");
  }
  if (t.cols() != len || mask.size() != len) throw ShapeError("status_attention: length mismatch");
  AttentionResult res;
  res.query = Tensor({d_s + d_t});
  for (std::size_t r = 0; r < d_o; ++r) {
    const double xr = x_o[r];
    const double* wr = w_a.row(r);
    for (std::size_t c = 0; c < d_s + d_t; ++c) res.query[c] += xr * wr[c];
  }
  Tensor logits({len});
  for (std::size_t i = 0; i < len; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d_s; ++c) acc += res.query[c] * states(c, i);
    for (std::size_t c = 0; c < d_t; ++c) acc += res.query[d_s + c] * t(c, i);
    logits[i] = acc;
  }
  res.weights = softmax_masked(logits, mask);
  res.context = Tensor({d_s});
  for (std::size_t c = 0; c < d_s; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += res.weights[i] * states(c, i);
    res.context[c] = acc;
  }
  return res;
}

void status_attention_backward(const Tensor& x_o, const Tensor& states, const Tensor& t, Mask mask,
                               const Tensor& w_a, const AttentionResult& fwd, std::span<const double> d_context,
                               Tensor& d_xo, Tensor& d_states, Tensor& d_t, Tensor& d_wa) {
  const std::size_t d_o = x_o.size(), d_s = states.rows(), d_tt = t.rows(), len = states.cols();
  const auto& alpha = fwd.weights;
  std::vector<double> d_alpha(len, 0.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    if (!mask[i]) continue;
    double acc = 0.0;
    for (std::size_t c = 0; c < d_s; ++c) acc += d_context[c] * states(c, i);
    d_alpha[i] = acc;
    mean += alpha[i] * acc;
  }
  std::vector<double> d_query(d_s + d_tt, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    if (!mask[i]) continue;
    const double d_logit = alpha[i] * (d_alpha[i] - mean);
    for (std::size_t c = 0; c < d_s; ++c) {
      d_states(c, i) += alpha[i] * d_context[c] + d_logit * fwd.query[c];
      d_query[c] += d_logit * states(c, i);
    }
    for (std::size_t c = 0; c < d_tt; ++c) {
      d_t(c, i) += d_logit * fwd.query[d_s + c];
      d_query[d_s + c] += d_logit * t(c, i);
    }
  }
  for (std::size_t r = 0; r < d_o; ++r) {
    const double* wr = w_a.row(r);
    double* dwr = d_wa.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < d_s + d_tt; ++c) {
      dwr[c] += x_o[r] * d_query[c];
      acc += wr[c] * d_query[c];
    }
    d_xo[r] += acc;
  }
}

Tensor zero_masked_columns(Tensor x, Mask mask) {
  for (std::size_t i = 0; i < x.cols(); ++i) {
    if (mask[i]) continue;
    for (std::size_t r = 0; r < x.rows(); ++r) x(r, i) = 0.0;
  }
  return x;
}

std::vector<Tensor> multigrained_conv(const Tensor& x, Mask mask, std::span<const Tensor* const> kernels,
                                      std::span<const Tensor* const> biases, Activation act) {
  if (kernels.size() != biases.size()) throw ShapeError("multigrained_conv: kernel/bias count mismatch");
  const Tensor input = zero_masked_columns(x, mask);
  std::vector<Tensor> maps;
  maps.reserve(kernels.size());
  for (std::size_t g = 0; g < kernels.size(); ++g) {
    Tensor y = conv1d_same(input, *kernels[g], *biases[g]);
    for (auto& v : y.values()) v = activate(v, act);
    maps.push_back(zero_masked_columns(std::move(y), mask));
  }
  return maps;
}

void multigrained_conv_backward(const Tensor& x_masked, Mask mask, const Tensor& kernel, const Tensor& map,
                                Tensor d_map, Activation act, Tensor& d_x, Tensor& d_kernel, Tensor& d_bias) {
  for (std::size_t r = 0; r < d_map.rows(); ++r) {
    for (std::size_t i = 0; i < d_map.cols(); ++i) {
      d_map(r, i) = mask[i] ? d_map(r, i) * activation_grad_from_output(map(r, i), act) : 0.0;
    }
  }
  Tensor d_in = Tensor::zeros_like(x_masked);
  conv1d_same_backward(x_masked, kernel, d_map, &d_in, d_kernel, d_bias);
  d_in = zero_masked_columns(std::move(d_in), mask);
  for (std::size_t k = 0; k < d_x.size(); ++k) d_x[k] += d_in[k];
}

GrainAttention atmc_attend(const std::vector<Tensor>& maps, const Tensor& x_o, const Tensor& t, Mask mask,
                           std::span<const Tensor* const> w_as) {
  if (maps.size() != w_as.size()) throw ShapeError("atmc_attend: one W_a per grain is required");
  GrainAttention out;
  std::size_t total = 0;
  for (const auto& m : maps) total += m.rows();
  out.concatenated = Tensor({total});
  std::size_t offset = 0;
  for (std::size_t g = 0; g < maps.size(); ++g) {
    out.grains.push_back(status_attention(x_o, maps[g], t, mask, *w_as[g]));
    const auto& ctx = out.grains.back().context;
    std::copy(ctx.values().begin(), ctx.values().end(), out.concatenated.data() + offset);
    offset += ctx.size();
  }
  return out;
}

Tensor masked_mean(const Tensor& states, Mask mask) {
  Tensor out({states.rows()});
  std::size_t n = 0;
  for (std::size_t i = 0; i < states.cols(); ++i) {
    if (!mask[i]) continue;
    ++n;
    for (std::size_t r = 0; r < states.rows(); ++r) out[r] += states(r, i);
  }
  if (n == 0) throw std::invalid_argument("masked_mean: every position is masked");
  for (auto& v : out.values()) v /= static_cast<double>(n);
  return out;
}

void masked_mean_backward(Mask mask, std::span<const double> d_out, Tensor& d_states) {
  const auto n = static_cast<double>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
  for (std::size_t i = 0; i < d_states.cols(); ++i) {
    if (!mask[i]) continue;
    for (std::size_t r = 0; r < d_states.rows(); ++r) d_states(r, i) += d_out[r] / n;
  }
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t out = w.rows(), in = w.cols();
  if (x.size() != in || b.size() != out) {
    throw ShapeError("dense: input " + x.shape_string() + " does not fit weight " + w.shape_string());
  }
  Tensor y({out});
  for (std::size_t r = 0; r < out; ++r) {
    const double* wr = w.row(r);
    double acc = b[r];
    for (std::size_t c = 0; c < in; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
  return y;
}

void dense_backward(const Tensor& x, const Tensor& w, std::span<const double> d_y, Tensor* d_x, Tensor& d_w,
                    Tensor& d_b) {
  const std::size_t out = w.rows(), in = w.cols();
  for (std::size_t r = 0; r < out; ++r) {
    const double g = d_y[r];
    if (g == 0.0) continue;
    d_b[r] += g;
    const double* wr = w.row(r);
    double* dwr = d_w.row(r);
    for (std::size_t c = 0; c < in; ++c) dwr[c] += g * x[c];
    if (d_x) {
      double* dx = d_x->data();
      for (std::size_t c = 0; c < in; ++c) dx[c] += wr[c] * g;
    }
  }
}

}  // namespace dmsn::layers
