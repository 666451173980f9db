#include "dmsn/eval/auc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dmsn {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("auc: labels must be 0 or 1");
    if (std::isnan(scores[i])) throw std::invalid_argument("auc: NaN score");
    pos += static_cast<std::uint64_t>(labels[i]);
  }
  const std::uint64_t neg = n - pos;
  if (pos == 0) throw SingleClassError("auc: no positive samples");
  if (neg == 0) throw SingleClassError("auc: no negative samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the positive rank sum, using mid-ranks so ties stay integral.
  std::uint64_t rank_sum_x2 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::uint64_t tied_pos = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) tied_pos += static_cast<std::uint64_t>(labels[order[j++]]);
    // Ranks i+1 .. j share the mid-rank (i + 1 + j) / 2.
    rank_sum_x2 += tied_pos * (i + 1 + j);
    i = j;
  }
  const std::uint64_t u_x2 = rank_sum_x2 - pos * (pos + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace dmsn
