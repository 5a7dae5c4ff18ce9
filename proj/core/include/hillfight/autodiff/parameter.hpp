#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hillfight/autodiff/tensor.hpp"

namespace hf::ad {

/// Trainable tensor plus its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool requires_grad = true;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Ordered, name-addressable collection of parameters. Layers refer to their
/// parameters by index, so copying a set (target networks, rollout
/// snapshots) keeps every layer binding valid.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor init);
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  std::size_t add_uniform(std::string name, Shape shape, std::size_t fan_in, std::mt19937_64& rng);

  Parameter& operator[](std::size_t i) { return params_.at(i); }
  const Parameter& operator[](std::size_t i) const { return params_.at(i); }
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const noexcept;

  /// Index of the named parameter or size() when absent.
  std::size_t find(std::string_view name) const noexcept;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  double grad_norm() const;
  /// Scales gradients so their global L2 norm is at most max_norm; returns the pre-clip norm.
  double clip_grad_norm(double max_norm);

  /// Copies values from a set with identical names and shapes (hard target update).
  void copy_values_from(const ParameterSet& other);
  /// Loads values by name; every parameter must be present with a matching shape.
  void load(const std::vector<NamedTensor>& tensors);
  std::vector<NamedTensor> export_values() const;

  /// Appends every parameter of `other` with `prefix` prepended to its name; returns index offset.
  std::size_t append(const ParameterSet& other, std::string_view prefix);

 private:
  std::vector<Parameter> params_;
};

}  // namespace hf::ad
