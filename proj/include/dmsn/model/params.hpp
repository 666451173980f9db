#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dmsn/model/variant.hpp"
#include "dmsn/numerics/tensor.hpp"

namespace dmsn {

// Ordered collection of named tensors. Gradients use the same layout.
class ParamSet {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const noexcept { return tensors_.size(); }
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor& operator[](std::string_view name) { return tensors_[index_of(name)]; }
  const Tensor& operator[](std::string_view name) const { return tensors_[index_of(name)]; }
  const std::string& name(std::size_t i) const { return names_[i]; }

  ParamSet zeros_like() const;
  void set_zero();
  std::size_t scalar_count() const;

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    return a.names_ == b.names_ && a.tensors_ == b.tensors_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ModelParams {
  VariantSpec spec;
  ParamSet tensors;
};

}  // namespace dmsn
