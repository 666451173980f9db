#include "dmsn/model/gradient_suite.hpp"

#include <algorithm>

#include "dmsn/model/network.hpp"
#include "dmsn/numerics/grad_check.hpp"
#include "dmsn/random.hpp"

namespace dmsn {

VariantSpec gradient_check_spec(VariantKind kind, FusionStrategy strategy) {
  VariantSpec s;
  s.kind = kind;
  s.strategy = strategy;
  s.n_cities = 30;
  s.d_e = 8;
  s.d_h = 8;
  s.d_t = 4;
  s.m = 8;
  s.kernel_widths = {1, 3, 5, 7};
  s.mlp_sizes = {32, 16, 1};
  s.max_len = 20;
  s.activation = Activation::tanh;
  return s;
}

SampleRecord gradient_check_record(std::size_t length, int n_cities, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x9cULL));
  SampleRecord r;
  r.user_id = 1;
  r.user = {3, 1, 2};
  r.status = {1, 4, 12, 0, 15};
  r.query_ts = 1577000000;
  for (std::size_t i = 0; i < length; ++i) {
    BehaviorEvent e;
    e.timestamp = r.query_ts - static_cast<std::int64_t>(rng.below(40 * 86400)) - 60;
    e.city = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n_cities, 12))));
    // Cycle the first five events through every stream so none is empty.
    e.product = static_cast<ProductType>(i < 5 ? i : rng.below(5));
    e.action = static_cast<ActionType>(rng.below(3));
    r.events.push_back(e);
  }
  r.candidate_city = r.events.front().city;
  r.label = 1;
  return r;
}

std::vector<TensorGradCheck> check_gradients(const VariantSpec& spec, const SampleRecord& record, std::uint64_t seed,
                                             double step) {
  const Network net(spec);
  const ModelParams mp = net.init_params(seed);
  const ModelInput input = make_input(record, spec);
  ParamSet grads = mp.tensors.zeros_like();
  net.loss_and_grad(input, record.label, mp.tensors, grads);

  const auto padded = net.padded_tables();
  std::vector<TensorGradCheck> out;
  ParamSet work = mp.tensors;
  for (std::size_t i = 0; i < mp.tensors.size(); ++i) {
    const bool frozen_row0 = std::find(padded.begin(), padded.end(), i) != padded.end();
    auto loss = [&](const Tensor& probe) {
      work[i] = probe;
      if (frozen_row0) std::fill(work[i].row(0), work[i].row(0) + work[i].cols(), 0.0);
      const double y = net.predict(input, work);
      return logistic_loss(record.label, y);
    };
    const auto res = grad_check(loss, mp.tensors[i], grads[i], step);
    work[i] = mp.tensors[i];
    out.push_back({std::string(to_string(spec.kind)) + (spec.strategy == FusionStrategy::per_stream ? "/II" : ""),
                   mp.tensors.name(i), res.max_rel_error});
  }
  return out;
}

}  // namespace dmsn
