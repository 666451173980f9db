#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dmsn/data/events.hpp"
#include "dmsn/model/params.hpp"

namespace dmsn {

struct EvalReport {
  std::string model_label;
  std::string dataset_label;
  double auc = 0.0;
  std::size_t total = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double seconds = 0.0;
};

EvalReport evaluate(const ModelParams& params, const std::vector<SampleRecord>& records, std::string model_label,
                    std::string dataset_label);

// One JSON object. Wall-clock time is included only when asked for, so the
// default rendering is reproducible.
std::string format_report(const EvalReport& report, bool with_timing = false);

}  // namespace dmsn
