#pragma once

#include <vector>

#include "dmsn/data/synthetic.hpp"
#include "dmsn/model/params.hpp"
#include "dmsn/train/trainer.hpp"

namespace dmsn {

// Item preference = destination preference x item preference. Both inputs
// must lie in (0,1).
double two_stage_score(double p_dest, double p_item);

// Inputs for a direct item model: the candidate is the item id.
LabeledSet prepare_items(const std::vector<ItemRecord>& records, const VariantSpec& spec);

struct TwoStageResult {
  double direct_auc = 0.0;     // item model alone
  double two_stage_auc = 0.0;  // destination model x item model
};

// Scores every item record with the destination model (candidate = the item's
// city) and the item model (candidate = the item), and compares the AUC of
// the item model alone against the two-stage product.
TwoStageResult evaluate_two_stage(const ModelParams& destination_model, const ModelParams& item_model,
                                  const std::vector<ItemRecord>& records);

}  // namespace dmsn
