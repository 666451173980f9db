#include "dmsn/eval/two_stage.hpp"

#include <algorithm>
#include <stdexcept>

#include "dmsn/eval/auc.hpp"
#include "dmsn/model/network.hpp"

namespace dmsn {

double two_stage_score(double p_dest, double p_item) {
  if (!(p_dest > 0.0 && p_dest < 1.0) || !(p_item > 0.0 && p_item < 1.0)) {
    throw std::invalid_argument("two_stage_score: scores must lie in (0,1)");
  }
  return p_dest * p_item;
}

LabeledSet prepare_items(const std::vector<ItemRecord>& records, const VariantSpec& spec) {
  if (spec.n_candidates <= 0) throw std::invalid_argument("item model needs a candidate vocabulary (n_candidates)");
  LabeledSet set;
  set.inputs.reserve(records.size());
  for (const auto& r : records) {
    set.inputs.push_back(make_input(r.record, spec, r.item));
    set.labels.push_back(r.record.label);
  }
  return set;
}

TwoStageResult evaluate_two_stage(const ModelParams& destination_model, const ModelParams& item_model,
                                  const std::vector<ItemRecord>& records) {
  const Network dest_net(destination_model.spec);
  const Network item_net(item_model.spec);
  std::vector<double> direct, combined;
  std::vector<int> labels;
  direct.reserve(records.size());
  combined.reserve(records.size());
  const auto clamp = [](double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); };
  for (const auto& r : records) {
    const double p_item =
        clamp(item_net.predict(make_input(r.record, item_model.spec, r.item), item_model.tensors));
    const double p_dest =
        clamp(dest_net.predict(make_input(r.record, destination_model.spec), destination_model.tensors));
    direct.push_back(p_item);
    combined.push_back(two_stage_score(p_dest, p_item));
    labels.push_back(r.record.label);
  }
  return {auc(direct, labels), auc(combined, labels)};
}

}  // namespace dmsn
