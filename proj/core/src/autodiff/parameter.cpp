#include "hillfight/autodiff/parameter.hpp"

#include <cmath>
#include <unordered_map>

namespace hf::ad {

std::size_t ParameterSet::add(std::string name, Tensor init) {
  if (find(name) != params_.size()) throw std::invalid_argument("duplicate parameter name: " + name);
  Tensor grad(init.shape(), 0.0);
  params_.push_back(Parameter{std::move(name), std::move(init), std::move(grad), true});
  return params_.size() - 1;
}

std::size_t ParameterSet::add_uniform(std::string name, Shape shape, std::size_t fan_in,
                                      std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor init(std::move(shape));
  for (auto& v : init.values()) v = dist(rng);
  return add(std::move(name), std::move(init));
}

std::size_t ParameterSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::size_t ParameterSet::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return params_.size();
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

double ParameterSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) {
    for (double g : p.grad.values()) sq += g * g;
  }
  return std::sqrt(sq);
}

double ParameterSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / (norm + 1e-12);
    for (auto& p : params_) {
      for (auto& g : p.grad.values()) g *= scale;
    }
  }
  return norm;
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.size() != size()) throw DimensionError("parameter sets differ in size");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name ||
        params_[i].value.shape() != other.params_[i].value.shape()) {
      throw DimensionError("parameter mismatch at " + params_[i].name);
    }
    params_[i].value = other.params_[i].value;
  }
}

void ParameterSet::load(const std::vector<NamedTensor>& tensors) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.tensor;
  for (auto& p : params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw DimensionError("checkpoint lacks parameter " + p.name);
    if (it->second->shape() != p.value.shape()) {
      throw DimensionError("checkpoint shape " + shape_string(it->second->shape()) + " for " + p.name +
                           " does not match " + shape_string(p.value.shape()));
    }
    p.value = *it->second;
  }
}

std::vector<NamedTensor> ParameterSet::export_values() const {
  std::vector<NamedTensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back({p.name, p.value});
  return out;
}

std::size_t ParameterSet::append(const ParameterSet& other, std::string_view prefix) {
  const std::size_t offset = params_.size();
  for (const auto& p : other.params_) add(std::string(prefix) + p.name, p.value);
  return offset;
}

}  // namespace hf::ad
