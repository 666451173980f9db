#include "dmsn/eval/fusing.hpp"

#include <cstdio>
#include <ostream>

#include "dmsn/eval/report.hpp"

namespace dmsn {

std::vector<FusingRow> fusing_rows(const TrainConfig& base) {
  std::vector<FusingRow> rows;
  for (int p = 0; p < kNumProductTypes; ++p) {
    FusingRow row;
    row.label = std::string(kProductNames[p]) + " single";
    row.config = base;
    row.config.variant.strategy = FusionStrategy::global;
    row.config.variant.streams = static_cast<std::uint8_t>(1u << p);
    rows.push_back(std::move(row));
  }
  FusingRow one{"strategy I", base};
  one.config.variant.strategy = FusionStrategy::global;
  one.config.variant.streams = kAllStreams;
  rows.push_back(std::move(one));
  FusingRow two{"strategy II", base};
  two.config.variant.strategy = FusionStrategy::per_stream;
  two.config.variant.streams = kAllStreams;
  rows.push_back(std::move(two));
  return rows;
}

std::vector<FusingRow> compare_fusing(const std::vector<SampleRecord>& train_records,
                                      const std::vector<SampleRecord>& valid_records,
                                      const std::vector<SampleRecord>& test_records, const TrainConfig& base,
                                      std::ostream* log) {
  auto rows = fusing_rows(base);
  for (auto& row : rows) {
    if (log) *log << "== " << row.label << "\n";
    const TrainResult tr = train(train_records, valid_records, row.config, log);
    row.valid_auc = tr.history.epochs[static_cast<std::size_t>(tr.history.best_epoch)].valid_auc;
    row.test_auc = evaluate(tr.params, test_records, row.label, "test").auc;
  }
  return rows;
}

void write_fusing_table(std::ostream& out, const std::vector<FusingRow>& rows) {
  out << "fusing_strategy\tvalid_auc\ttest_auc\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "\t%.6f\t%.6f\n", r.valid_auc, r.test_auc);
    out << r.label << buf;
  }
}

}  // namespace dmsn
