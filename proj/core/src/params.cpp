#include "tsgcl/params.hpp"

#include "tsgcl/error.hpp"

namespace tsgcl {

ParamId ParameterSet::add(std::string name, Tensor value) {
  if (find(name)) throw Error("duplicate parameter name: " + name);
  names_.push_back(std::move(name));
  value.set_requires_grad(true);
  values_.push_back(std::move(value));
  return ParamId{values_.size() - 1};
}

ParamId ParameterSet::add_gaussian(std::string name, Shape shape, double sigma, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& v : t.data()) v = normal(rng);
  return add(std::move(name), std::move(t));
}

ParamId ParameterSet::add_zeros(std::string name, Shape shape) {
  return add(std::move(name), Tensor(std::move(shape)));
}

std::optional<ParamId> ParameterSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return ParamId{i};
  return std::nullopt;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

ParamBinding::ParamBinding(ad::Tape& tape, const ParameterSet& params)
    : tape_(&tape), params_(&params), bound_(params.size()) {}

ad::Var ParamBinding::operator()(ParamId id) {
  auto& slot = bound_.at(id.index);
  if (!slot) {
    Tensor t = params_->value(id);
    t.set_requires_grad(true);
    slot = tape_->leaf(std::move(t));
  }
  return *slot;
}

std::vector<Tensor> ParamBinding::collect(const ad::Gradients& grads) const {
  std::vector<Tensor> out;
  out.reserve(bound_.size());
  for (std::size_t i = 0; i < bound_.size(); ++i) {
    if (bound_[i]) out.push_back(grads.of(*bound_[i]));
    else out.emplace_back(params_->value(i).shape());
  }
  return out;
}

}  // namespace tsgcl
