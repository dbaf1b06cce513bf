#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsgcl/autodiff.hpp"
#include "tsgcl/tensor.hpp"

namespace tsgcl {

using Rng = std::mt19937_64;

struct ParamId {
  std::size_t index = 0;
};

/// Ordered, named collection of learnable tensors. Order is insertion order
/// and is part of the model file format.
class ParameterSet {
 public:
  ParamId add(std::string name, Tensor value);
  /// Gaussian(0, sigma) initialised tensor.
  ParamId add_gaussian(std::string name, Shape shape, double sigma, Rng& rng);
  ParamId add_zeros(std::string name, Shape shape);

  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name(ParamId id) const { return names_[id.index]; }
  Tensor& value(ParamId id) { return values_[id.index]; }
  const Tensor& value(ParamId id) const { return values_[id.index]; }
  Tensor& value(std::size_t i) { return values_[i]; }
  const Tensor& value(std::size_t i) const { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::optional<ParamId> find(const std::string& name) const;
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

/// Lazily places parameters on a tape as gradient-carrying leaves, at most
/// once per parameter, and collects their gradients after the reverse pass.
class ParamBinding {
 public:
  ParamBinding(ad::Tape& tape, const ParameterSet& params);

  ad::Var operator()(ParamId id);
  ad::Tape& tape() noexcept { return *tape_; }

  /// One gradient per parameter, in ParameterSet order; zeros for parameters
  /// the loss does not depend on.
  std::vector<Tensor> collect(const ad::Gradients& grads) const;

 private:
  ad::Tape* tape_;
  const ParameterSet* params_;
  std::vector<std::optional<ad::Var>> bound_;
};

}  // namespace tsgcl
