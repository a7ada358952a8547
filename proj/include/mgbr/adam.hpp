#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mgbr/params.hpp"
#include "mgbr/tensor.hpp"

namespace mgbr::nc {

struct AdamConfig {
  float lr = 2e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// Adam with bias correction. Moment buffers are keyed by parameter name and
/// allocated lazily with the parameter's shape.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  long step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

  /// One update over named (param, grad) pairs; grad length must match the
  /// parameter. The step counter advances once per call.
  void step(std::vector<std::tuple<std::string, Tensor*, const std::vector<float>*>> params);

  /// Update every parameter in the store from its tape gradient.
  void step(ParameterStore& params, const Tape& tape);

 private:
  struct Moments {
    std::vector<float> m, v;
  };
  AdamConfig cfg_;
  long step_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace mgbr::nc
