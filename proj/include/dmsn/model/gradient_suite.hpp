#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmsn/data/events.hpp"
#include "dmsn/model/variant.hpp"

namespace dmsn {

struct TensorGradCheck {
  std::string variant;
  std::string tensor;
  double max_rel_error = 0.0;
};

// Small dimensions used for finite-difference checks. The activation is tanh:
// central differences straddling a ReLU kink are meaningless.
VariantSpec gradient_check_spec(VariantKind kind, FusionStrategy strategy = FusionStrategy::global);

// A deterministic record with `length` events spread over all five streams.
SampleRecord gradient_check_record(std::size_t length, int n_cities, std::uint64_t seed);

// Central-difference check of every parameter tensor of `spec` on one record.
// Frozen padding rows are held fixed on both sides of the comparison.
inline constexpr double kGradCheckStep = 5e-4;

std::vector<TensorGradCheck> check_gradients(const VariantSpec& spec, const SampleRecord& record, std::uint64_t seed,
                                             double step = kGradCheckStep);

}  // namespace dmsn
