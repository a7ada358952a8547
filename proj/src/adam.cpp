#include "mgbr/adam.hpp"

#include <cmath>

namespace mgbr::nc {

void AdamState::step(
    std::vector<std::tuple<std::string, Tensor*, const std::vector<float>*>> params) {
  ++step_;
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(step_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(step_));
  for (auto& [name, p, g] : params) {
    if (p->numel() != g->size()) {
      throw ContractError("adam: gradient size mismatch for '" + name + "'");
    }
    auto& mo = moments_[name];
    if (mo.m.empty()) {
      mo.m.assign(p->numel(), 0.0f);
      mo.v.assign(p->numel(), 0.0f);
    }
    auto& pv = p->vals();
    const auto& gv = *g;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0f - cfg_.beta1) * gv[i];
      mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0f - cfg_.beta2) * gv[i] * gv[i];
      const float mhat = mo.m[i] / bc1;
      const float vhat = mo.v[i] / bc2;
      pv[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void AdamState::step(ParameterStore& params, const Tape& tape) {
  std::vector<std::tuple<std::string, Tensor*, const std::vector<float>*>> batch;
  batch.reserve(params.size());
  for (auto& [name, t] : params.entries()) {
    batch.emplace_back(name, &t, &tape.grad(t));
  }
  step(std::move(batch));
}

}  // namespace mgbr::nc
