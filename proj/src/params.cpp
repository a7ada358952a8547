#include "mgbr/params.hpp"

namespace mgbr::nc {

Tensor& ParameterStore::add(const std::string& name, Tensor t) {
  if (index_.count(name)) throw ContractError("parameter '" + name + "' already registered");
  index_[name] = entries_.size();
  entries_.emplace_back(name, std::move(t));
  return entries_.back().second;
}

Tensor& ParameterStore::add_gaussian(const std::string& name, std::vector<int> shape,
                                     float stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.vals()) v = stddev * static_cast<float>(rng.gaussian());
  return add(name, std::move(t));
}

Tensor& ParameterStore::add_zeros(const std::string& name, std::vector<int> shape) {
  return add(name, Tensor(std::move(shape)));
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

std::size_t ParameterStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParameterStore::watch_all(Tape& tape) {
  for (auto& [name, t] : entries_) tape.watch(t);
}

}  // namespace mgbr::nc
