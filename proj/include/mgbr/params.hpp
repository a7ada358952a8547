#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mgbr/rng.hpp"
#include "mgbr/tensor.hpp"

namespace mgbr::nc {

/// Named trainable tensors in a stable (insertion) order, so that
/// checkpoints, Adam moments and gradient sweeps all agree on enumeration.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& add_gaussian(const std::string& name, std::vector<int> shape,
                       float stddev, Rng& rng);
  Tensor& add_zeros(const std::string& name, std::vector<int> shape);

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }

  std::size_t total_elements() const;

  /// Register every parameter as a tape leaf (start of a training step).
  void watch_all(Tape& tape);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mgbr::nc
