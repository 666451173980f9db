#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dmsn/data/events.hpp"
#include "dmsn/train/trainer.hpp"

namespace dmsn {

struct FusingRow {
  std::string label;
  TrainConfig config;
  double valid_auc = 0.0;
  double test_auc = 0.0;
};

// Row configs in table order: five single-stream models (train, flight,
// hotel, item, search), then strategy I and strategy II. All rows share
// `base` (variant, dimensions, seed) and differ only in their input streams.
std::vector<FusingRow> fusing_rows(const TrainConfig& base);

// Trains every row on the same splits and reports validation/test AUC.
std::vector<FusingRow> compare_fusing(const std::vector<SampleRecord>& train_records,
                                      const std::vector<SampleRecord>& valid_records,
                                      const std::vector<SampleRecord>& test_records, const TrainConfig& base,
                                      std::ostream* log = nullptr);

void write_fusing_table(std::ostream& out, const std::vector<FusingRow>& rows);

}  // namespace dmsn
