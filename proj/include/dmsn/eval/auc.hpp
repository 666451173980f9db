#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace dmsn {

class SingleClassError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly,
// ties counted as one half. O(n log n) via mid-ranks. Labels must be 0/1 and
// both classes present.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace dmsn
