#include "dmsn/eval/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "dmsn/eval/auc.hpp"
#include "dmsn/model/network.hpp"
#include "dmsn/train/trainer.hpp"

namespace dmsn {

EvalReport evaluate(const ModelParams& params, const std::vector<SampleRecord>& records, std::string model_label,
                    std::string dataset_label) {
  const auto start = std::chrono::steady_clock::now();
  const Network net(params.spec);
  const LabeledSet set = prepare(records, params.spec);
  const auto scores = predict_all(net, params.tensors, set.inputs);
  EvalReport r;
  r.model_label = std::move(model_label);
  r.dataset_label = std::move(dataset_label);
  r.auc = auc(scores, set.labels);
  r.total = set.size();
  for (int y : set.labels) r.positives += static_cast<std::size_t>(y);
  r.negatives = r.total - r.positives;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string format_report(const EvalReport& report, bool with_timing) {
  nlohmann::ordered_json j;
  j["model"] = report.model_label;
  j["dataset"] = report.dataset_label;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", report.auc);
  j["auc"] = nlohmann::ordered_json::parse(buf);
  j["samples"] = report.total;
  j["positives"] = report.positives;
  j["negatives"] = report.negatives;
  if (with_timing) j["seconds"] = std::round(report.seconds * 1000.0) / 1000.0;
  return j.dump();
}

}  // namespace dmsn
